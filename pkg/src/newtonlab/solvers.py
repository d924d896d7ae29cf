"""Newton-type solvers for one Backward Euler step, plus convergence
criteria.

Four variants, all minimizing the incremental potential from a warm
start at the previous displacement:

* newton: exact (possibly indefinite) Hessian, direct solve; the
  direction is flipped if it is not a descent direction; a singular
  system falls back to one projected iteration.
* pn (Projected Newton): the elastic Hessian block is projected to PSD
  every iteration, so the full system is SPD and factors by Cholesky.
* pod (Project-on-Demand Newton): attempt the unprojected factorization
  first; on an indefiniteness signal switch projection on for the
  current iteration plus a countdown of n_projected_steps - 1 more, and
  keep projecting while the line search is cutting steps.
* kn (Kinetic Newton): regularize with mass, H = M/(beta dt)^2 + H_f.
  beta is halved until the factorization succeeds, halved again when the
  line search cuts deep (alpha < alpha_low), and grown back toward 1
  when steps are nearly full (alpha > alpha_high). The regularized
  system equals the Hessian of the same problem at time step beta dt.

Convergence criteria (value reported in native units):

* resnorm: ||r||_2 <= tol [N]
* scaled:  ||r||_2 <= tol * ||f_ref||_2
* step:    ||du||_inf <= dt * tol, du the unscaled Newton direction
* accel:   ||M^-1 r||_inf <= tol [m/s^2], exact or diagonal mass inverse
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import assembly, linesearch, potential
from .linalg import IndefiniteSignal, SingularSignal, cholesky, solve_indefinite

NEWTON = "newton"
PROJECTED_NEWTON = "pn"
POD_NEWTON = "pod"
KINETIC_NEWTON = "kn"

SOLVER_VARIANTS = (NEWTON, PROJECTED_NEWTON, POD_NEWTON, KINETIC_NEWTON)

RESIDUAL_NORM = "resnorm"
SCALED_RESIDUAL = "scaled"
STEP_LENGTH = "step"
ACCELERATION_BALANCE = "accel"

CRITERION_VARIANTS = (RESIDUAL_NORM, SCALED_RESIDUAL, STEP_LENGTH,
                      ACCELERATION_BALANCE)

FAIL_NONE = "none"
FAIL_MAX_ITERATIONS = "max_iterations"
FAIL_LINE_SEARCH = "line_search_failure"
FAIL_BC_INVERSION = "direct_bc_inversion"
FAIL_INDEFINITE_PROJECTED = "indefinite_projected_hessian"


@dataclass(frozen=True)
class SolverVariant:
    variant: str
    projection_mode: str = assembly.PER_QUADRATURE_ANALYTIC
    n_projected_steps: int = 4
    shrink: float = 2.0
    alpha_low: float = 0.3
    alpha_high: float = 0.9

    def __post_init__(self):
        if self.variant not in SOLVER_VARIANTS:
            raise ValueError(f"unknown solver variant {self.variant!r}")
        if self.projection_mode not in (assembly.PER_ELEMENT_NUMERICAL,
                                        assembly.PER_QUADRATURE_ANALYTIC):
            raise ValueError(f"invalid projection mode {self.projection_mode!r}")
        if self.n_projected_steps < 1:
            raise ValueError("n_projected_steps must be >= 1")
        if not self.shrink > 1:
            raise ValueError("shrink must exceed 1")
        if not 0 < self.alpha_low < self.alpha_high <= 1:
            raise ValueError("need 0 < alpha_low < alpha_high <= 1")


@dataclass(frozen=True)
class ConvergenceCriterion:
    variant: str
    tolerance: float
    f_ref: Optional[np.ndarray] = None
    mass_inverse: str = potential.EXACT_MASS_INVERSE

    def __post_init__(self):
        if self.variant not in CRITERION_VARIANTS:
            raise ValueError(f"unknown criterion {self.variant!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.variant == SCALED_RESIDUAL and self.f_ref is None:
            raise ValueError("scaled residual criterion needs a reference force")


@dataclass(frozen=True)
class IterationRecord:
    alpha: float
    beta: float
    projected: bool
    chol_failures: int
    criterion_value: float
    energy: float


@dataclass
class StepReport:
    iterations: int = 0
    records: list = field(default_factory=list)
    converged: bool = False
    failure_reason: str = FAIL_NONE

    @property
    def projected_iterations(self):
        return sum(1 for r in self.records if r.projected)

    @property
    def chol_failures(self):
        return sum(r.chol_failures for r in self.records)


def check_convergence(crit, ip, u, du_unscaled=None, gradient=None):
    """Evaluate a criterion; returns (met, value in native units)."""
    if crit.variant == STEP_LENGTH:
        if du_unscaled is None:
            raise ValueError("step-length criterion needs the unscaled direction")
        value = float(np.max(np.abs(du_unscaled))) if len(du_unscaled) else 0.0
        return value <= ip.dt * crit.tolerance, value
    if crit.variant == ACCELERATION_BALANCE:
        ra = ip.acceleration_residual(u, crit.mass_inverse)
        value = float(np.max(np.abs(ra))) if len(ra) else 0.0
        return value <= crit.tolerance, value
    r = gradient if gradient is not None else ip.gradient(u)
    value = float(np.linalg.norm(r))
    if crit.variant == RESIDUAL_NORM:
        return value <= crit.tolerance, value
    return value <= crit.tolerance * float(np.linalg.norm(crit.f_ref)), value


class _ProjectedFactorError(Exception):
    """The always-projected SPD system failed to factor."""


def _projected_direction(ip, u, g, mode):
    H = ip.hessian(u, mode)
    fac = cholesky(H)
    if isinstance(fac, IndefiniteSignal):
        raise _ProjectedFactorError
    return -fac.solve(g)


def _run_line_search(ip, ls_kind, u, du, e, slope):
    def energy_at(alpha):
        return ip.energy(u + alpha * du)

    if ls_kind == linesearch.STANDARD_ARMIJO:
        return linesearch.standard_armijo(energy_at, e, slope)
    if ls_kind == linesearch.ROBUST:
        def slope_at(alpha):
            return float(np.dot(ip.gradient(u + alpha * du), du))
        return linesearch.robust_backtracking(energy_at, slope_at, e, slope)
    raise ValueError(f"unknown line search kind {ls_kind!r}")


def solve_step(ip, variant, ls_kind=linesearch.ROBUST, crit=None,
               max_iterations=1000):
    """Minimize the incremental potential for one time step.

    Returns (u, StepReport). The caller decides whether to accept u into
    ip via advance(); on failure u is the last iterate reached.
    """
    if crit is None:
        crit = ConvergenceCriterion(ACCELERATION_BALANCE, 1.0)
    report = StepReport()
    u = ip.initial_guess()
    e = ip.energy(u)
    if not np.isfinite(e):
        report.failure_reason = FAIL_BC_INVERSION
        return u, report
    g = ip.gradient(u)

    # A settled state may converge with zero iterations; the step-length
    # criterion has no direction yet and is skipped here.
    if crit.variant != STEP_LENGTH:
        met, _ = check_convergence(crit, ip, u, gradient=g)
        if met:
            report.converged = True
            return u, report

    project_psd = False  # pod state
    countdown = 0
    beta = 1.0  # kn state

    for _ in range(max_iterations):
        chol_failures = 0
        projected = False
        try:
            if variant.variant == NEWTON:
                H = ip.hessian(u, assembly.NO_PROJECTION)
                du = solve_indefinite(H, -g)
                if isinstance(du, SingularSignal):
                    du = _projected_direction(ip, u, g, variant.projection_mode)
                    projected = True
                else:
                    slope0 = float(np.dot(g, du))
                    if slope0 > 0:
                        du = -du
                    elif slope0 == 0.0:
                        du = _projected_direction(ip, u, g, variant.projection_mode)
                        projected = True
            elif variant.variant == PROJECTED_NEWTON:
                du = _projected_direction(ip, u, g, variant.projection_mode)
                projected = True
            elif variant.variant == POD_NEWTON:
                if not project_psd:
                    H = ip.hessian(u, assembly.NO_PROJECTION)
                    fac = cholesky(H)
                    if isinstance(fac, IndefiniteSignal):
                        chol_failures += 1
                        project_psd = True
                        countdown = variant.n_projected_steps - 1
                if project_psd:
                    du = _projected_direction(ip, u, g, variant.projection_mode)
                    projected = True
                else:
                    du = -fac.solve(g)
            else:  # kinetic newton
                Hf = ip.force_hessian(u, assembly.NO_PROJECTION)
                while True:
                    fac = cholesky(ip.compose_hessian(Hf, beta * ip.dt))
                    if not isinstance(fac, IndefiniteSignal):
                        break
                    chol_failures += 1
                    beta /= variant.shrink
                    if beta < 1e-30:
                        raise _ProjectedFactorError
                du = -fac.solve(g)
        except _ProjectedFactorError:
            report.failure_reason = FAIL_INDEFINITE_PROJECTED
            return u, report

        slope = float(np.dot(g, du))
        outcome = _run_line_search(ip, ls_kind, u, du, e, slope)
        if outcome.failed:
            report.iterations += 1
            report.records.append(IterationRecord(
                alpha=0.0, beta=beta, projected=projected,
                chol_failures=chol_failures, criterion_value=np.nan, energy=e))
            report.failure_reason = FAIL_LINE_SEARCH
            return u, report
        alpha = outcome.alpha
        u = u + alpha * du
        e = ip.energy(u)
        g = ip.gradient(u)

        met, value = check_convergence(crit, ip, u, du_unscaled=du, gradient=g)
        report.iterations += 1
        report.records.append(IterationRecord(
            alpha=alpha, beta=beta, projected=projected,
            chol_failures=chol_failures, criterion_value=value, energy=e))
        if met:
            report.converged = True
            return u, report

        if variant.variant == POD_NEWTON:
            project_psd = (alpha < 1.0) or countdown > 0
            countdown = max(0, countdown - 1)
        elif variant.variant == KINETIC_NEWTON:
            if alpha < variant.alpha_low:
                beta /= variant.shrink
            elif alpha > variant.alpha_high:
                beta = min(1.0, variant.shrink * beta)

    report.failure_reason = FAIL_MAX_ITERATIONS
    return u, report


def newton_error_estimate_probe(ip, u, u_star):
    """(||du - e||, ||e||) with e = u* - u and du the exact Newton step.

    Near a solution the Newton step matches the error up to a quadratic
    remainder, so halving ||e|| should shrink ||du - e|| about 4x.
    """
    g = ip.gradient(u)
    du = solve_indefinite(ip.hessian(u, assembly.NO_PROJECTION), -g)
    if isinstance(du, SingularSignal):
        raise RuntimeError("Hessian is singular at the probe state")
    e = u_star - u
    return float(np.linalg.norm(du - e)), float(np.linalg.norm(e))
