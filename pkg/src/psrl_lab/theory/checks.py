"""Numerical certification of the bounded-error state-estimation claims.

Every check here is exact-arithmetic-adjacent: optimal tables come from
policy iteration (linear-solve precision), estimates are snapped to the
nearest embedded state, and each claim is tested as a hard inequality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .mdp import StateEstimator, TabularMdp, random_grid_mdp
from .solve import ValueTables, optimal_values, policy_evaluation, policy_iteration

UPPER_BOUND_TOL = 1e-8


class TheoremViolation(AssertionError):
    """An exact-oracle inequality failed; points at a solver bug."""


@dataclass
class SnappedQReport:
    """Q-tables read off the snapped estimates, and how far they sit from Q*."""

    q_hat: np.ndarray
    policy: np.ndarray
    snapped: np.ndarray
    sup_error: float


@dataclass
class UpperBoundReport:
    v_star: np.ndarray
    v_policy: np.ndarray
    slack: float
    epsilon: float

    @property
    def holds(self) -> bool:
        return self.slack >= -UPPER_BOUND_TOL


@dataclass
class NuisanceReport:
    deltas: tuple[float, ...]
    sensitivities: tuple[float, ...]
    fitted_constant: float

    @property
    def decreasing(self) -> bool:
        return self.sensitivities[-1] < self.sensitivities[0]


@dataclass
class IdentityLimitReport:
    epsilons: tuple[float, ...]
    fractions: tuple[float, ...]

    @property
    def reaches_one(self) -> bool:
        return self.fractions[-1] == 1.0

    @property
    def non_decreasing(self) -> bool:
        return all(b >= a for a, b in zip(self.fractions, self.fractions[1:]))


def snapped_q(mdp: TabularMdp, estimator: StateEstimator,
              tables: ValueTables | None = None) -> SnappedQReport:
    """Q read at the snapped estimate of each state, plus its sup-norm error.

    The induced policy acts greedily on those rows; when the estimate radius
    is under half the embedding gap the snap is the identity and the error
    is exactly zero.
    """
    if tables is None:
        tables = optimal_values(mdp)
    snapped = mdp.snap(estimator.estimates(mdp))
    q_hat = tables.q_star[snapped]
    sup_error = float(np.abs(q_hat - tables.q_star).max())
    return SnappedQReport(q_hat, np.argmax(q_hat, axis=1), snapped, sup_error)


def _upper_bound_report(mdp: TabularMdp, estimator: StateEstimator,
                        tables: ValueTables) -> UpperBoundReport:
    report = snapped_q(mdp, estimator, tables)
    v_policy = policy_evaluation(mdp, report.policy)
    slack = float((tables.v_star - v_policy).min())
    return UpperBoundReport(tables.v_star, v_policy, slack, estimator.epsilon)


def verify_upper_bound(mdp: TabularMdp, estimator: StateEstimator,
                       tables: ValueTables | None = None) -> UpperBoundReport:
    """Certify V*(s) >= V^pi-hat(s) for the greedy-on-estimates policy.

    pi-hat is evaluated under the TRUE dynamics with an exact linear solve;
    a violation beyond tolerance is impossible for a correct solver and is
    raised as such.
    """
    if tables is None:
        tables = optimal_values(mdp)
    out = _upper_bound_report(mdp, estimator, tables)
    if not out.holds:
        raise TheoremViolation(
            f"estimated-state policy beat V* by {-out.slack:.3e} "
            f"(eps={estimator.epsilon})")
    return out


def nuisance_sensitivity(mdp: TabularMdp, rng: np.random.Generator,
                         deltas: tuple[float, ...] = (0.1, 0.01, 0.001),
                         tables: ValueTables | None = None) -> NuisanceReport:
    """Sup-norm movement of V* under scaled perturbations of (T, R).

    The perturbation directions are drawn once and shared across scales:
    transition rows get a zero-sum direction (re-normalized after adding),
    rewards a uniform one. Sensitivity should shrink roughly linearly as
    the scale drops, and the fitted constant bounds |V*_z - V*| <= delta*C.
    """
    if tables is None:
        tables = optimal_values(mdp)
    delta_t = rng.normal(size=mdp.transitions.shape)
    delta_t -= delta_t.mean(axis=2, keepdims=True)
    delta_r = rng.uniform(-1.0, 1.0, size=mdp.rewards.shape)
    base_policy = tables.greedy_policy()
    sensitivities = []
    for delta in deltas:
        perturbed = mdp.with_nuisance(delta, delta_t, delta_r)
        v_z = policy_iteration(perturbed, base_policy).v_star
        sensitivities.append(float(np.abs(v_z - tables.v_star).max()))
    fitted = max(s / d for s, d in zip(sensitivities, deltas))
    return NuisanceReport(tuple(deltas), tuple(sensitivities), fitted)


def identity_limit(mdp: TabularMdp, estimator: StateEstimator,
                   num_halvings: int = 6) -> IdentityLimitReport:
    """Fraction of states snapping home as the estimate radius halves to zero.

    The offset directions are held fixed and only the radius shrinks, so the
    home fraction is non-decreasing (nearest-state cells are convex) and hits
    exactly 1 once the radius is under half the minimum embedding gap.
    """
    gap = mdp.min_embedding_gap()
    epsilons, fractions = [], []
    home = np.arange(mdp.num_states)
    for k in range(1, num_halvings + 1):
        eps = gap / 2.0 ** k
        scaled = estimator.scaled(mdp, eps)
        frac = float(np.mean(mdp.snap(scaled.estimates(mdp)) == home))
        epsilons.append(eps)
        fractions.append(frac)
    return IdentityLimitReport(tuple(epsilons), tuple(fractions))


@dataclass
class SuiteResult:
    """Aggregate verdict over the randomized MDP population."""

    num_mdps: int
    seed: int
    upper_bound_violations: int
    min_slack: float
    below_half_gap_failures: int
    halving_monotonicity_failures: int
    identity_limit_failures: int
    nuisance_failures: int
    elapsed_seconds: float
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.upper_bound_violations == 0
                and self.below_half_gap_failures == 0
                and self.halving_monotonicity_failures == 0
                and self.identity_limit_failures == 0
                and self.nuisance_failures == 0)

    def summary_lines(self) -> list[str]:
        def mark(bad: int) -> str:
            return "PASS" if bad == 0 else f"FAIL ({bad})"

        return [
            f"verified {self.num_mdps} random MDPs (seed {self.seed}) "
            f"in {self.elapsed_seconds:.1f}s",
            f"  upper bound V* >= V^pi-hat          {mark(self.upper_bound_violations)}"
            f"   min slack {self.min_slack:.3e}",
            f"  zero Q-error below half gap         {mark(self.below_half_gap_failures)}",
            f"  Q-error non-increasing on halvings  {mark(self.halving_monotonicity_failures)}",
            f"  identity limit reaches 1            {mark(self.identity_limit_failures)}",
            f"  nuisance sensitivity decreasing     {mark(self.nuisance_failures)}",
        ]


def run_suite(seed: int = 0, num_mdps: int = 1000,
              collect_rows: bool = False) -> SuiteResult:
    """Full randomized certification pass; counts violations (expected: zero)."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    ub_viol = 0
    min_slack = np.inf
    below_half = 0
    halving = 0
    ident = 0
    nuis = 0
    rows: list[dict] = []
    for index in range(num_mdps):
        mdp = random_grid_mdp(rng)
        tables = optimal_values(mdp)
        gap = mdp.min_embedding_gap()

        eps0 = rng.uniform(0.0, 1.2) * gap
        estimator = StateEstimator(mdp, eps0, rng=rng)
        ub = _upper_bound_report(mdp, estimator, tables)
        if not ub.holds:
            ub_viol += 1
        min_slack = min(min_slack, ub.slack)

        safe = estimator.scaled(mdp, 0.45 * gap)
        err_safe = snapped_q(mdp, safe, tables).sup_error
        if err_safe != 0.0:
            below_half += 1

        # halving sequence entering the exact regime after one step
        seq_eps = 0.9 * gap
        errors = []
        for _ in range(5):
            errors.append(snapped_q(mdp, estimator.scaled(mdp, seq_eps),
                                    tables).sup_error)
            seq_eps /= 2.0
        if any(b > a for a, b in zip(errors, errors[1:])):
            halving += 1

        ident_report = identity_limit(mdp, estimator)
        if not (ident_report.reaches_one and ident_report.non_decreasing
                and all(f == 1.0 for f in ident_report.fractions[1:])):
            ident += 1

        nu = nuisance_sensitivity(mdp, rng, tables=tables)
        if not nu.decreasing:
            nuis += 1

        if collect_rows:
            rows.append({
                "mdp_index": index,
                "num_states": mdp.num_states,
                "num_actions": mdp.num_actions,
                "gamma": mdp.gamma,
                "min_gap": gap,
                "epsilon": eps0,
                "upper_bound_slack": ub.slack,
                "q_error_at_epsilon": snapped_q(mdp, estimator, tables).sup_error,
                "q_error_below_half_gap": err_safe,
                "identity_fraction_final": ident_report.fractions[-1],
                "sensitivity_delta_0.1": nu.sensitivities[0],
                "sensitivity_delta_0.001": nu.sensitivities[-1],
            })
    elapsed = time.perf_counter() - start
    return SuiteResult(num_mdps, seed, ub_viol, float(min_slack), below_half,
                       halving, ident, nuis, elapsed, rows)
