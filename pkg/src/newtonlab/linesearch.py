"""Backtracking line searches over an energy oracle.

Both searches share a contract: given the energy along a descent
direction, return a step factor alpha from the halving schedule
{alpha_max * 2^-k} or a failure signal once alpha drops below 1e-7.

standard_armijo accepts alpha when

    E(u + alpha du) - E(u) <= c alpha grad_E . du,   c = 1e-4.

robust_backtracking first tries the same test. When the energy
difference is so small that it is dominated by floating-point
cancellation (|dE| <= 0.1 |E(u)|), it falls back to a trapezoidal
estimate built from directional derivatives at both endpoints:

    dE_approx = (alpha/2) du . (grad_E(u + alpha du) + grad_E(u))
    eps_est   = (alpha/2) |du . (grad_E(u + alpha du) - grad_E(u))|

and accepts when dE_approx + eps_est <= c alpha grad_E . du. The
directional derivatives are exact where the energy difference has lost
its significant digits, and eps_est bounds the trapezoidal truncation
error conservatively (it is O(alpha^2) while dE_approx is O(alpha)).
"""

from dataclasses import dataclass

import numpy as np

ARMIJO_C = 1e-4
ALPHA_FAIL = 1e-7
MAX_HALVINGS = 60

STANDARD_ARMIJO = "armijo"
ROBUST = "robust"

LINE_SEARCH_KINDS = (STANDARD_ARMIJO, ROBUST)


@dataclass
class LineSearchOutcome:
    alpha: float
    evaluations: int
    gradient_evaluations: int = 0
    used_approximate_condition: bool = False
    failed: bool = False


def standard_armijo(energy_at, e0, slope, alpha_max=1.0):
    """Armijo backtracking.

    energy_at(alpha) evaluates E(u + alpha du); e0 = E(u); slope is the
    directional derivative grad_E(u) . du (must be negative). Infinite
    energies are always rejected.
    """
    if not slope < 0:
        raise ValueError(f"directional derivative must be negative, got {slope}")
    alpha = float(alpha_max)
    evals = 0
    for _ in range(MAX_HALVINGS + 1):
        if alpha < ALPHA_FAIL:
            break
        e = energy_at(alpha)
        evals += 1
        if np.isfinite(e) and e - e0 <= ARMIJO_C * alpha * slope:
            return LineSearchOutcome(alpha=alpha, evaluations=evals)
        alpha *= 0.5
    return LineSearchOutcome(alpha=0.0, evaluations=evals, failed=True)


def robust_backtracking(energy_at, slope_at, e0, slope, alpha_max=1.0):
    """Parameter-free robust backtracking.

    energy_at(alpha) evaluates E(u + alpha du); slope_at(alpha) evaluates
    grad_E(u + alpha du) . du; e0 = E(u); slope = slope_at(0) (not
    re-evaluated). The gradient is consulted at most once per trial
    alpha, and never at a state with infinite energy.
    """
    if not slope < 0:
        raise ValueError(f"directional derivative must be negative, got {slope}")
    alpha = float(alpha_max)
    evals = 0
    grad_evals = 0
    for _ in range(MAX_HALVINGS + 1):
        if alpha < ALPHA_FAIL:
            break
        e = energy_at(alpha)
        evals += 1
        if np.isfinite(e):
            de = e - e0
            threshold = ARMIJO_C * alpha * slope
            if de <= threshold:
                return LineSearchOutcome(alpha=alpha, evaluations=evals,
                                         gradient_evaluations=grad_evals)
            if abs(de) <= 0.1 * abs(e0):
                slope_trial = slope_at(alpha)
                grad_evals += 1
                de_approx = 0.5 * alpha * (slope_trial + slope)
                eps_est = 0.5 * alpha * abs(slope_trial - slope)
                if de_approx + eps_est <= threshold:
                    return LineSearchOutcome(alpha=alpha, evaluations=evals,
                                             gradient_evaluations=grad_evals,
                                             used_approximate_condition=True)
        alpha *= 0.5
    return LineSearchOutcome(alpha=0.0, evaluations=evals,
                             gradient_evaluations=grad_evals, failed=True)
