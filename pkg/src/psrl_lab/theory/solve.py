"""Exact planning oracles for finite MDPs: value/policy iteration, evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp


@dataclass
class ValueTables:
    """Converged optimal tables plus convergence diagnostics."""

    v_star: np.ndarray
    q_star: np.ndarray
    iterations: int
    residual: float

    def greedy_policy(self) -> np.ndarray:
        return np.argmax(self.q_star, axis=1)


def bellman_backup(mdp: TabularMdp, q: np.ndarray) -> np.ndarray:
    """One optimality sweep: R + gamma * T @ max_a' q."""
    v = q.max(axis=1)
    return mdp.rewards + mdp.gamma * (mdp.transitions @ v)


def value_iteration(mdp: TabularMdp, tol: float = 1e-12) -> ValueTables:
    """Iterate the optimality backup until the sup-norm update falls below tol.

    The final Bellman residual is at most gamma * tol. Iteration count is
    guarded by the geometric-convergence bound (plus margin) as a bug trap.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if mdp.gamma >= 1.0:
        raise ValueError("value iteration requires gamma < 1")
    r_max = float(np.abs(mdp.rewards).max())
    if mdp.gamma == 0.0 or r_max == 0.0:
        max_iters = 4
    else:
        bound = np.log(tol * (1.0 - mdp.gamma) / r_max) / np.log(mdp.gamma)
        max_iters = int(np.ceil(bound)) + 50
    q = np.zeros_like(mdp.rewards)
    for iteration in range(1, max_iters + 1):
        q_next = bellman_backup(mdp, q)
        diff = float(np.abs(q_next - q).max())
        q = q_next
        if diff <= tol:
            return ValueTables(q.max(axis=1), q, iteration, mdp.gamma * diff)
    raise RuntimeError(
        f"value iteration failed to reach tol={tol} in {max_iters} sweeps")


def _policy_matrix(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """Accept deterministic action indices (S,) or a distribution table (S, A)."""
    policy = np.asarray(policy)
    if policy.ndim == 1:
        table = np.zeros((mdp.num_states, mdp.num_actions))
        table[np.arange(mdp.num_states), policy.astype(int)] = 1.0
        return table
    if policy.shape != (mdp.num_states, mdp.num_actions):
        raise ValueError("policy table must be (num_states, num_actions)")
    if not np.allclose(policy.sum(axis=1), 1.0, atol=1e-10) or (policy < -1e-12).any():
        raise ValueError("policy rows must be distributions over actions")
    return np.asarray(policy, dtype=np.float64)


def policy_evaluation(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """Exact V^pi via the linear Bellman-evaluation system (no iteration)."""
    pi = _policy_matrix(mdp, policy)
    # P_pi(s, s') = sum_a pi(a|s) T(s, a, s');  r_pi(s) = sum_a pi(a|s) R(s, a)
    p_pi = np.einsum("sa,sat->st", pi, mdp.transitions)
    r_pi = (pi * mdp.rewards).sum(axis=1)
    system = np.eye(mdp.num_states) - mdp.gamma * p_pi
    return np.linalg.solve(system, r_pi)


def policy_iteration(mdp: TabularMdp,
                     initial_policy: np.ndarray | None = None) -> ValueTables:
    """Howard improvement from any starting policy; exact at the fixed point.

    Each round is an exact evaluation plus a greedy step, so the returned
    tables carry linear-solve precision rather than a sweep tolerance. A
    stall guard breaks floating-point ties between co-optimal policies.
    """
    if initial_policy is None:
        policy = np.zeros(mdp.num_states, dtype=int)
    else:
        policy = np.asarray(initial_policy, dtype=int).copy()
    v_prev = None
    for rounds in range(1, mdp.num_actions ** mdp.num_states + 16):
        v = policy_evaluation(mdp, policy)
        q = mdp.rewards + mdp.gamma * (mdp.transitions @ v)
        improved = np.argmax(q, axis=1)
        stalled = v_prev is not None and float(np.abs(v - v_prev).max()) <= 1e-13
        if np.array_equal(improved, policy) or stalled:
            return ValueTables(q.max(axis=1), q, rounds, 0.0)
        policy, v_prev = improved, v
    raise RuntimeError("policy iteration failed to stabilize")  # pragma: no cover


def optimal_values(mdp: TabularMdp) -> ValueTables:
    """Loose value iteration to seed policy iteration; exact optimal tables."""
    seed_tables = value_iteration(mdp, tol=1e-6)
    return policy_iteration(mdp, seed_tables.greedy_policy())
