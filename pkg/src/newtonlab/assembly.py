"""Global assembly of mass, elastic energy/gradient/Hessian.

Assembly is vectorized over elements (batched numpy) and single-threaded,
so identical inputs produce bit-identical matrices. Element Hessian
blocks are explicitly symmetrized before scatter, which keeps the global
matrix exactly symmetric.

Three projection modes for the elastic Hessian:

* NO_PROJECTION: the exact Hessian.
* PER_ELEMENT_NUMERICAL: each (3n)x(3n) element block is eigendecomposed
  and its eigenvalues clamped to [0, inf) before scatter.
* PER_QUADRATURE_ANALYTIC: each 9x9 per-quadrature-point stress
  derivative is projected before the B^T H B congruence.
"""

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fem, materials
from .linalg import SparseSymmetric

NO_PROJECTION = "none"
PER_ELEMENT_NUMERICAL = "element"
PER_QUADRATURE_ANALYTIC = "quadrature"

PROJECTION_MODES = (NO_PROJECTION, PER_ELEMENT_NUMERICAL, PER_QUADRATURE_ANALYTIC)


@dataclass(frozen=True)
class DofMap:
    """Element-to-global displacement index map with the COO scatter
    pattern of the element blocks (precomputed once per mesh)."""

    element_dofs: np.ndarray  # (E, 3n)
    num_dofs: int
    rows: np.ndarray  # flattened block row indices
    cols: np.ndarray  # flattened block col indices


class MeshKernels:
    """Stacked per-element rest data for one mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        E = mesh.num_tets
        n = fem.nodes_per_element(mesh.element_kind)
        rule = fem.quadrature_for(mesh.element_kind)
        Q = len(rule.weights)
        corners = mesh.corner_positions()
        edge = corners[:, 1:4, :] - corners[:, 0:1, :]
        self.volumes = np.linalg.det(edge) / 6.0
        if np.any(self.volumes <= 0):
            raise ValueError("mesh contains non-positively oriented elements")

        grad_lam = np.linalg.inv(
            np.concatenate([np.ones((E, 4, 1)), corners], axis=2)
        )[:, 1:, :].transpose(0, 2, 1)  # (E, 4, 3)

        self.shape_gradients = np.empty((E, Q, n, 3))
        for q in range(Q):
            lam = rule.points[q]
            if mesh.element_kind == fem.P1:
                self.shape_gradients[:, q] = grad_lam
            else:
                for a in range(4):
                    self.shape_gradients[:, q, a] = (4.0 * lam[a] - 1.0) * grad_lam[:, a]
                for s, (la, lb) in enumerate(fem.TET_EDGES):
                    self.shape_gradients[:, q, 4 + s] = 4.0 * (
                        lam[lb] * grad_lam[:, la] + lam[la] * grad_lam[:, lb])

        # B with dF[i,j]/du[a,k] = delta_ik gradN[a,j], rows = 3i+j.
        self.b_ops = np.zeros((E, Q, 9, 3 * n))
        for i in range(3):
            for j in range(3):
                self.b_ops[:, :, 3 * i + j, i::3] = self.shape_gradients[:, :, :, j]

        self.weights = 6.0 * self.volumes[:, None] * rule.weights[None, :]  # (E, Q)

        element_dofs = (3 * mesh.tets[:, :n, None] + np.arange(3)).reshape(E, 3 * n)
        rows = np.repeat(element_dofs, 3 * n, axis=1).ravel()
        cols = np.tile(element_dofs, (1, 3 * n)).ravel()
        self.dofmap = DofMap(element_dofs=element_dofs,
                             num_dofs=3 * mesh.num_vertices,
                             rows=rows, cols=cols)

        # Reference scalar mass block: integral of N_a N_b on a unit-volume
        # tet; the element block is density * volume * this.
        unit = fem.build_kernel(
            np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 6.0]], dtype=float),
            mesh.element_kind)
        self.mass_ref = fem.element_mass(unit, 1.0)

    def deformation_gradients(self, u):
        """(E, Q, 3, 3) deformation gradients at every quadrature point."""
        ue = u[self.dofmap.element_dofs]  # (E, 3n)
        F = np.einsum("eqrc,ec->eqr", self.b_ops, ue).reshape(
            ue.shape[0], self.weights.shape[1], 3, 3)
        return F + np.eye(3)


_kernel_cache = weakref.WeakKeyDictionary()


def mesh_kernels(mesh):
    kernels = _kernel_cache.get(mesh)
    if kernels is None:
        kernels = MeshKernels(mesh)
        _kernel_cache[mesh] = kernels
    return kernels


def _scatter(kernels, blocks):
    """Sum symmetric element blocks (E, 3n, 3n) into a SparseSymmetric."""
    dm = kernels.dofmap
    A = sp.coo_matrix((blocks.ravel(), (dm.rows, dm.cols)),
                      shape=(dm.num_dofs, dm.num_dofs)).tocsr()
    return SparseSymmetric(upper=sp.triu(A, format="csr"))


def assemble_mass(mesh, density):
    """Consistent global mass matrix (SPD)."""
    if density <= 0:
        raise ValueError("density must be positive")
    kernels = mesh_kernels(mesh)
    blocks = (density * kernels.volumes)[:, None, None] * kernels.mass_ref
    return _scatter(kernels, blocks)


def assemble_elastic_energy(mesh, model, u):
    """Total strain energy; +inf if any element is inverted (Neo-Hookean)."""
    kernels = mesh_kernels(mesh)
    F = kernels.deformation_gradients(u)
    psi = materials.energy_density_batch(model, F)
    if np.any(np.isinf(psi)):
        return np.inf
    return float(np.sum(kernels.weights * psi))


def assemble_elastic_gradient(mesh, model, u):
    """Gradient of the total strain energy w.r.t. nodal displacements.

    Raises InvertedElementError where the energy would be infinite.
    """
    kernels = mesh_kernels(mesh)
    F = kernels.deformation_gradients(u)
    P = materials.pk1_batch(model, F)
    E, Q = kernels.weights.shape
    vecP = P.reshape(E, Q, 9)
    ge = np.einsum("eq,eqkc,eqk->ec", kernels.weights, kernels.b_ops, vecP)
    g = np.zeros(kernels.dofmap.num_dofs)
    np.add.at(g, kernels.dofmap.element_dofs, ge)
    return g


def element_hessian_blocks(mesh, model, u, mode):
    """Per-element (3n)x(3n) elastic Hessian blocks in the given mode."""
    if mode not in PROJECTION_MODES:
        raise ValueError(f"unknown projection mode {mode!r}")
    kernels = mesh_kernels(mesh)
    F = kernels.deformation_gradients(u)
    E, Q = kernels.weights.shape
    H = materials.dpdf_batch(model, F.reshape(E * Q, 3, 3)).reshape(E, Q, 9, 9)
    if mode == PER_QUADRATURE_ANALYTIC:
        H = materials.project_psd_batch(H.reshape(E * Q, 9, 9)).reshape(E, Q, 9, 9)
    Ke = np.einsum("eq,eqka,eqkl,eqlb->eab", kernels.weights, kernels.b_ops,
                   H, kernels.b_ops)
    Ke = 0.5 * (Ke + np.transpose(Ke, (0, 2, 1)))
    if mode == PER_ELEMENT_NUMERICAL:
        Ke = materials.project_psd_batch(Ke)
    return Ke


def assemble_elastic_hessian(mesh, model, u, mode=NO_PROJECTION):
    """Global elastic Hessian with the requested projection mode."""
    kernels = mesh_kernels(mesh)
    return _scatter(kernels, element_hessian_blocks(mesh, model, u, mode))
