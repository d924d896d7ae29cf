"""Backward Euler incremental potential for a hyperelastic tet mesh.

One time step minimizes

    E(u) = (u - u_tilde)^T M (u - u_tilde) / (2 dt^2)   inertia
         + elastic strain energy                         stiffness
         + (a_d / (2 dt)) (u - u_prev)^T M (u - u_prev)  mass damping
         - (u - u_prev)^T f_ext                          gravity (shifted)
         + (sigma/2) sum_C M_ii (u_i - target_i)^2       penalty boundaries

with u_tilde = u_prev + dt v_prev. Gravity uses the shifted form so the
energy grows with the per-step displacement rather than the accumulated
displacement (same gradient, far fewer cancelled digits).

Boundary handling is either "direct" (constrained DOFs are removed from
the unknowns; gradients/Hessians of the unconstrained assembly are
filtered) or "penalty" (mass-scaled quadratic penalties keep all DOFs).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import assembly
from .geometry import VertexSet
from .linalg import SparseSymmetric, cholesky

DIRECT = "direct"
PENALTY = "penalty"

EXACT_MASS_INVERSE = "exact"
DIAGONAL_MASS_INVERSE = "diag"


@dataclass
class BoundarySpec:
    """Fully constrained vertices with a prescribed displacement
    trajectory.

    trajectory(t) returns the (len(constrained), 3) displacement targets
    at time t. penalty is the factor sigma [1/s^2] used in penalty mode.
    """

    mode: str
    constrained: VertexSet = field(default_factory=VertexSet)
    trajectory: Optional[Callable[[float], np.ndarray]] = None
    penalty: float = 0.0

    def __post_init__(self):
        if self.mode not in (DIRECT, PENALTY):
            raise ValueError(f"unknown boundary mode {self.mode!r}")
        if self.mode == PENALTY and len(self.constrained) and self.penalty <= 0:
            raise ValueError("penalty mode requires a positive penalty factor")

    def targets_at(self, t):
        if self.trajectory is None:
            return np.zeros((len(self.constrained), 3))
        return np.asarray(self.trajectory(t), dtype=float)


class IncrementalPotential:
    """Mutable per-simulation state; advance() moves it one step forward."""

    def __init__(self, mesh, model, dt, gravity=(0.0, 0.0, -9.81),
                 boundary=None, damping=0.0):
        if dt <= 0:
            raise ValueError("time step must be positive")
        if damping < 0:
            raise ValueError("damping coefficient must be nonnegative")
        self.mesh = mesh
        self.model = model
        self.dt = float(dt)
        self.damping = float(damping)
        self.boundary = boundary if boundary is not None else BoundarySpec(mode=DIRECT)
        self.num_full_dofs = 3 * mesh.num_vertices

        self.mass = assembly.assemble_mass(mesh, model.params.density)
        self._mass_diag = self.mass.full().diagonal()

        cverts = self.boundary.constrained.indices
        self.constrained_dofs = (3 * cverts[:, None] + np.arange(3)).ravel()
        free_mask = np.ones(self.num_full_dofs, dtype=bool)
        free_mask[self.constrained_dofs] = False
        self.free_dofs = np.nonzero(free_mask)[0]

        g = np.asarray(gravity, dtype=float)
        self.gravity_force = self.mass.matvec(np.tile(g, mesh.num_vertices))

        self.t = 0.0
        self.u_prev = np.zeros(self.num_full_dofs)
        self.v_prev = np.zeros(self.num_full_dofs)
        self.u_tilde = self.u_prev + self.dt * self.v_prev
        self._targets = self.boundary.targets_at(self.dt)
        self._mass_factor = None
        self._free_cache = {}

    # -- degree-of-freedom bookkeeping ---------------------------------

    @property
    def direct_mode(self):
        return self.boundary.mode == DIRECT

    @property
    def num_dofs(self):
        """Dimension of the optimization unknown."""
        return len(self.free_dofs) if self.direct_mode else self.num_full_dofs

    def full_state(self, u):
        """Expand the unknown vector to full space (targets imposed)."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.num_dofs:
            raise ValueError(f"state has dimension {u.shape[0]}, expected {self.num_dofs}")
        if not self.direct_mode:
            return u
        full = np.empty(self.num_full_dofs)
        full[self.free_dofs] = u
        full[self.constrained_dofs] = self._targets.ravel()
        return full

    def restrict(self, vec_full):
        """Filter a full-space vector to the unknown DOFs."""
        return vec_full[self.free_dofs] if self.direct_mode else vec_full

    def initial_guess(self):
        """Warm start: previous displacements on the unknown DOFs."""
        return self.u_prev[self.free_dofs].copy() if self.direct_mode else self.u_prev.copy()

    def _restrict_matrix(self, A):
        if not self.direct_mode:
            return A
        key = id(A)
        cached = self._free_cache.get(key)
        if cached is not None:
            return cached
        sub = SparseSymmetric.from_full(A.full()[self.free_dofs][:, self.free_dofs])
        self._free_cache[key] = sub
        return sub

    @property
    def mass_restricted(self):
        return self._restrict_matrix(self.mass)

    # -- energy terms --------------------------------------------------

    def _penalty_terms(self, full):
        sigma = self.boundary.penalty
        cd = self.constrained_dofs
        if self.direct_mode or sigma <= 0 or len(cd) == 0:
            return 0.0, None
        d = full[cd] - self._targets.ravel()
        w = sigma * self._mass_diag[cd]
        return 0.5 * np.dot(w, d * d), (cd, w, d)

    def energy(self, u):
        """Incremental potential; +inf on an inverted Neo-Hookean state."""
        full = self.full_state(u)
        elastic = assembly.assemble_elastic_energy(self.mesh, self.model, full)
        if np.isinf(elastic):
            return np.inf
        dm = full - self.u_tilde
        e_inertia = 0.5 * np.dot(dm, self.mass.matvec(dm)) / self.dt**2
        du = full - self.u_prev
        e_damp = 0.0
        if self.damping > 0:
            e_damp = 0.5 * self.damping / self.dt * np.dot(du, self.mass.matvec(du))
        e_grav = -np.dot(du, self.gravity_force)
        e_pen, _ = self._penalty_terms(full)
        return float(e_inertia + elastic + e_damp + e_grav + e_pen)

    def gradient(self, u):
        """Exact gradient of energy() on the unknown DOFs (the Backward
        Euler residual)."""
        full = self.full_state(u)
        g = assembly.assemble_elastic_gradient(self.mesh, self.model, full)
        g = g + self.mass.matvec(full - self.u_tilde) / self.dt**2
        if self.damping > 0:
            g = g + (self.damping / self.dt) * self.mass.matvec(full - self.u_prev)
        g = g - self.gravity_force
        _, pen = self._penalty_terms(full)
        if pen is not None:
            cd, w, d = pen
            g[cd] += w * d
        return self.restrict(g)

    def force_hessian(self, u, mode=assembly.NO_PROJECTION):
        """Hessian of the non-inertial terms (elastic + damping + penalty)
        on the unknown DOFs. Only the elastic block is ever projected."""
        full = self.full_state(u)
        H = assembly.assemble_elastic_hessian(self.mesh, self.model, full, mode)
        if self.damping > 0:
            H = H + self.mass.scaled(self.damping / self.dt)
        sigma = self.boundary.penalty
        if not self.direct_mode and sigma > 0 and len(self.constrained_dofs):
            p = np.zeros(self.num_full_dofs)
            p[self.constrained_dofs] = sigma * self._mass_diag[self.constrained_dofs]
            H = SparseSymmetric(upper=(H.upper + sp.diags(p)).tocsr())
        if self.direct_mode:
            H = SparseSymmetric.from_full(H.full()[self.free_dofs][:, self.free_dofs])
        return H

    def hessian(self, u, mode=assembly.NO_PROJECTION, beta=1.0):
        """Full Hessian M/(beta dt)^2 + force Hessian.

        beta < 1 reproduces the Hessian of the same state at the smaller
        time step beta * dt (regularized system of Kinetic Newton).
        """
        dt_eff = beta * self.dt
        return self.compose_hessian(self.force_hessian(u, mode), dt_eff)

    def compose_hessian(self, force_hessian, dt_eff):
        return force_hessian + self.mass_restricted.scaled(1.0 / dt_eff**2)

    # -- diagnostics ---------------------------------------------------

    def mass_factor(self):
        if self._mass_factor is None:
            factor = cholesky(self.mass_restricted)
            if not hasattr(factor, "solve"):
                raise RuntimeError("mass matrix is not positive definite")
            self._mass_factor = factor
        return self._mass_factor

    def acceleration_residual(self, u, mass_inverse=EXACT_MASS_INVERSE):
        """M^{-1} gradient(u) [m/s^2] on the unknown DOFs."""
        r = self.gradient(u)
        if mass_inverse == EXACT_MASS_INVERSE:
            return self.mass_factor().solve(r)
        if mass_inverse == DIAGONAL_MASS_INVERSE:
            return r / self.restrict(self._mass_diag)
        raise ValueError(f"unknown mass inverse mode {mass_inverse!r}")

    # -- time stepping -------------------------------------------------

    def advance(self, u_solution):
        """Accept a step solution: update u, v, u_tilde and move the
        boundary targets to the next step's end time."""
        full = self.full_state(u_solution)
        self.v_prev = (full - self.u_prev) / self.dt
        self.u_prev = full
        self.t += self.dt
        self.u_tilde = self.u_prev + self.dt * self.v_prev
        self._targets = self.boundary.targets_at(self.t + self.dt)
        return self.u_prev, self.v_prev, self.u_tilde
