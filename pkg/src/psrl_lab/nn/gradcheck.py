"""Finite-difference audit of analytic gradients.

The checker treats the loss as a black-box closure: calling it must run
the forward pass and accumulate analytic gradients into the networks it
closes over. Central differences then re-evaluate the same closure under
parameter perturbations, so the numeric side never trusts the tape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .engine import Network

# Relative error denominator floor: below this scale, central differences
# are dominated by float64 rounding of an O(1) loss.
_DENOM_FLOOR = 1e-5


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    loss_value: float
    worst_location: str


def grad_check(networks: Sequence[Network], loss_fn: Callable[[], float],
               tolerance: float, eps: float = 1e-5) -> GradCheckReport:
    """Compare the closure's accumulated gradients to central differences.

    tolerance must be positive; a non-finite loss anywhere fails the audit
    and names the location being probed.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    for net in networks:
        net.zero_grads()
    loss0 = float(loss_fn())
    if not np.isfinite(loss0):
        return GradCheckReport(np.inf, False, loss0, "unperturbed loss")
    analytic = [[p.grad.copy() for p in net.params()] for net in networks]

    max_rel = 0.0
    worst = "none"
    for ni, net in enumerate(networks):
        for pi, p in enumerate(net.params()):
            flat = p.value.ravel()
            ga = analytic[ni][pi].ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + eps
                lp = float(loss_fn())
                flat[j] = orig - eps
                lm = float(loss_fn())
                flat[j] = orig
                if not (np.isfinite(lp) and np.isfinite(lm)):
                    return GradCheckReport(
                        np.inf, False, loss0,
                        f"net {ni} param {pi} entry {j}: non-finite perturbed loss")
                gn = (lp - lm) / (2.0 * eps)
                rel = abs(ga[j] - gn) / max(abs(gn), _DENOM_FLOOR)
                if rel > max_rel:
                    max_rel = rel
                    worst = f"net {ni} param {pi} entry {j}"
    for net in networks:
        net.zero_grads()
    return GradCheckReport(max_rel, max_rel <= tolerance, loss0, worst)
