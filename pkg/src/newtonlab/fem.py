"""Element-level kernels: quadrature, shape gradients, deformation
gradients, the linear displacement-to-F operator, and consistent mass.

Total-Lagrangian, rest-linearized: all shape gradients are taken in the
rest configuration, so the operator B mapping stacked nodal displacements
to vec(F) - vec(I) is constant per quadrature point. F is flattened
row-major: vec(F)[3*i + j] = F[i, j].
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .geometry import P1, P2, TET_EDGES


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference tetrahedron (volume 1/6).

    points: (Q, 4) barycentric coordinates; weights: (Q,) positive,
    summing to 1/6; degree: highest polynomial degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


def quadrature_for(kind):
    """Energy quadrature: 1-point (degree 1) for P1, 4-point (degree 2)
    for P2."""
    if kind == P1:
        pts = np.full((1, 4), 0.25)
        wts = np.array([1.0 / 6.0])
        return QuadratureRule(points=pts, weights=wts, degree=1)
    if kind == P2:
        a = 0.5854101966249685
        b = 0.1381966011250105
        pts = np.full((4, 4), b)
        np.fill_diagonal(pts, a)
        wts = np.full(4, 1.0 / 24.0)
        return QuadratureRule(points=pts, weights=wts, degree=2)
    raise ValueError(f"unknown element kind {kind!r}")


def nodes_per_element(kind):
    return {P1: 4, P2: 10}[kind]


def _barycentric_gradients(corners):
    """(4, 3) gradients of the barycentric coordinates of an affine tet."""
    T = np.ones((4, 4))
    T[:, 1:] = corners
    # lambda(x) = T^{-T} (1, x); gradients are rows 1..3 of the inverse.
    return np.linalg.inv(T)[1:, :].T


def _shape_monomials(kind):
    """Shape functions as barycentric monomials: list (per node) of
    (coefficient, 4-tuple exponents)."""
    if kind == P1:
        return [[(1.0, tuple(int(i == a) for i in range(4)))] for a in range(4)]
    mono = []
    for a in range(4):
        e1 = tuple(int(i == a) for i in range(4))
        e2 = tuple(2 * int(i == a) for i in range(4))
        mono.append([(2.0, e2), (-1.0, e1)])
    for la, lb in TET_EDGES:
        e = tuple(int(i == la) + int(i == lb) for i in range(4))
        mono.append([(4.0, e)])
    return mono


def _integral_monomial(expo, volume):
    """Exact integral of a barycentric monomial over a tet of given volume."""
    num = 1
    for e in expo:
        num *= factorial(e)
    return 6.0 * volume * num / factorial(sum(expo) + 3)


def _shape_values_and_gradients(kind, lam, grad_lam):
    """Shape values (n,) and gradients (n, 3) at barycentric point lam."""
    if kind == P1:
        return lam.copy(), grad_lam.copy()
    n_vals = np.empty(10)
    n_grads = np.empty((10, 3))
    for a in range(4):
        n_vals[a] = lam[a] * (2.0 * lam[a] - 1.0)
        n_grads[a] = (4.0 * lam[a] - 1.0) * grad_lam[a]
    for s, (la, lb) in enumerate(TET_EDGES):
        n_vals[4 + s] = 4.0 * lam[la] * lam[lb]
        n_grads[4 + s] = 4.0 * (lam[lb] * grad_lam[la] + lam[la] * grad_lam[lb])
    return n_vals, n_grads


@dataclass(frozen=True)
class ElementKernel:
    """Precomputed rest-configuration data for one element.

    shape_gradients: (Q, n, 3) gradients of the shape functions at each
    quadrature point; b_operators: (Q, 9, 3n) matrices with
    vec(F) = vec(I) + B @ u; weights: (Q,) physical quadrature weights
    summing to the rest volume.
    """

    kind: str
    rest_volume: float
    shape_gradients: np.ndarray
    b_operators: np.ndarray
    weights: np.ndarray


def build_kernel(corners, kind=P1):
    """Kernel for one element from its (4, 3) rest corner positions."""
    corners = np.asarray(corners, dtype=float)
    e = corners[1:4] - corners[0]
    volume = np.linalg.det(e) / 6.0
    if volume <= 0:
        raise ValueError("element has non-positive rest volume")
    grad_lam = _barycentric_gradients(corners)
    rule = quadrature_for(kind)
    n = nodes_per_element(kind)
    Q = len(rule.weights)
    grads = np.empty((Q, n, 3))
    for q in range(Q):
        _, grads[q] = _shape_values_and_gradients(kind, rule.points[q], grad_lam)
    b_ops = b_operators_from_gradients(grads)
    weights = 6.0 * volume * rule.weights
    return ElementKernel(kind=kind, rest_volume=volume, shape_gradients=grads,
                         b_operators=b_ops, weights=weights)


def b_operators_from_gradients(grads):
    """(Q, 9, 3n) B matrices from (Q, n, 3) shape gradients.

    dF[i, j] / du[a, k] = delta_ik * gradN[a, j].
    """
    Q, n, _ = grads.shape
    B = np.zeros((Q, 9, 3 * n))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if i == k:
                    B[:, 3 * i + j, k::3] = grads[:, :, j]
    return B


def deformation_gradient(kernel, element_displacements, q):
    """F at quadrature point q for stacked nodal displacements (3n,)."""
    u = np.asarray(element_displacements, dtype=float)
    return np.eye(3) + (kernel.b_operators[q] @ u).reshape(3, 3)


def element_mass(kernel, density):
    """Consistent element mass matrix, (3n) x (3n), integrated exactly."""
    if density <= 0:
        raise ValueError("density must be positive")
    mono = _shape_monomials(kernel.kind)
    n = len(mono)
    S = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            val = 0.0
            for ca, ea in mono[a]:
                for cb, eb in mono[b]:
                    expo = tuple(x + y for x, y in zip(ea, eb))
                    val += ca * cb * _integral_monomial(expo, kernel.rest_volume)
            S[a, b] = S[b, a] = val
    return density * np.kron(S, np.eye(3))
