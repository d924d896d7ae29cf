"""Isotropic hyperelastic energy densities and their derivatives.

Two models:

* Neo-Hookean: psi = mu/2 (I_C - 3) - mu ln J + lambda/2 (ln J)^2,
  defined for det F > 0, with a logarithmic compression barrier.
* Stable Neo-Hookean: an inversion-safe variant in which the logarithmic
  volumetric terms are replaced by their 4th-order Taylor polynomials in
  J - 1. It is stress-free at F = I, its Hessian there equals the
  Neo-Hookean one, and it stays within a few percent of Neo-Hookean for
  mild deformation while remaining finite for any F.

All second derivatives are 9x9 matrices acting on row-major vec(F).
Batched variants (leading element axis) back the global assembly.
"""

from dataclasses import dataclass, field

import numpy as np

NEO_HOOKEAN = "NeoHookean"
STABLE_NEO_HOOKEAN = "StableNeoHookean"


class InvertedElementError(RuntimeError):
    """Derivative request at a state where Neo-Hookean energy is infinite.

    Energy evaluation itself returns +inf instead; solvers must check the
    energy before asking for derivatives.
    """

# Levi-Civita symbol, used for cofactor derivatives.
_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0


@dataclass(frozen=True)
class MaterialParams:
    """Young's modulus E [Pa], Poisson's ratio nu, density rho [kg/m^3];
    Lame parameters are derived."""

    youngs_modulus: float
    poisson_ratio: float
    density: float
    mu: float = field(init=False)
    lam: float = field(init=False)

    def __post_init__(self):
        E, nu = self.youngs_modulus, self.poisson_ratio
        if E <= 0:
            raise ValueError("Young's modulus must be positive")
        if not 0 <= nu < 0.5:
            raise ValueError("Poisson's ratio must lie in [0, 0.5)")
        if self.density <= 0:
            raise ValueError("density must be positive")
        object.__setattr__(self, "mu", E / (2.0 * (1.0 + nu)))
        object.__setattr__(self, "lam", E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))


@dataclass(frozen=True)
class MaterialModel:
    variant: str
    params: MaterialParams

    def __post_init__(self):
        if self.variant not in (NEO_HOOKEAN, STABLE_NEO_HOOKEAN):
            raise ValueError(f"unknown material variant {self.variant!r}")


def _cofactor(F):
    """Batched cofactor matrix: cof(F) = det(F) F^{-T}, valid for any F."""
    c = np.empty_like(F)
    c[..., 0, :] = np.cross(F[..., 1, :], F[..., 2, :])
    c[..., 1, :] = np.cross(F[..., 2, :], F[..., 0, :])
    c[..., 2, :] = np.cross(F[..., 0, :], F[..., 1, :])
    return c


# 4th-order Taylor polynomials of ln J and (ln J)^2 around J = 1 and
# their derivatives in e = J - 1.
def _p4(e):
    return e - e**2 / 2.0 + e**3 / 3.0 - e**4 / 4.0


def _p4d(e):
    return 1.0 - e + e**2 - e**3


def _p4dd(e):
    return -1.0 + 2.0 * e - 3.0 * e**2


def _q4(e):
    return e**2 - e**3 + (11.0 / 12.0) * e**4


def _q4d(e):
    return 2.0 * e - 3.0 * e**2 + (11.0 / 3.0) * e**3


def _q4dd(e):
    return 2.0 - 6.0 * e + 11.0 * e**2


def energy_density_batch(model, F):
    """Energies (m,) for stacked deformation gradients (m, 3, 3).

    Neo-Hookean returns +inf where det F <= 0.
    """
    F = np.asarray(F, dtype=float)
    mu, lam = model.params.mu, model.params.lam
    J = np.linalg.det(F)
    IC = np.einsum("...ij,...ij->...", F, F)
    if model.variant == NEO_HOOKEAN:
        psi = np.full(J.shape, np.inf)
        ok = J > 0
        logJ = np.log(J, where=ok, out=np.zeros_like(J))
        psi[ok] = (mu / 2.0 * (IC[ok] - 3.0) - mu * logJ[ok]
                   + lam / 2.0 * logJ[ok] ** 2)
        return psi
    e = J - 1.0
    return mu / 2.0 * (IC - 3.0) - mu * _p4(e) + lam / 2.0 * _q4(e)


def pk1_batch(model, F):
    """First Piola-Kirchhoff stresses (m, 3, 3)."""
    F = np.asarray(F, dtype=float)
    mu, lam = model.params.mu, model.params.lam
    J = np.linalg.det(F)
    cof = _cofactor(F)
    if model.variant == NEO_HOOKEAN:
        if np.any(J <= 0):
            raise InvertedElementError("Neo-Hookean stress at det F <= 0")
        s = (lam * np.log(J) - mu) / J
    else:
        e = J - 1.0
        s = -mu * _p4d(e) + lam / 2.0 * _q4d(e)
    return mu * F + s[..., None, None] * cof


def dpdf_batch(model, F):
    """9x9 stress derivatives (m, 9, 9), symmetric by construction."""
    F = np.asarray(F, dtype=float)
    single = F.ndim == 2
    if single:
        F = F[None]
    mu, lam = model.params.mu, model.params.lam
    J = np.linalg.det(F)
    cof = _cofactor(F)
    # d cof(F)_ij / dF_kl = eps_ikm eps_jln F_mn
    dcof = np.einsum("ikm,jln,emn->eijkl", _EPS3, _EPS3, F)
    if model.variant == NEO_HOOKEAN:
        if np.any(J <= 0):
            raise InvertedElementError("Neo-Hookean Hessian at det F <= 0")
        logJ = np.log(J)
        s = (lam * logJ - mu) / J
        sd = (lam * (1.0 - logJ) + mu) / J**2
    else:
        e = J - 1.0
        s = -mu * _p4d(e) + lam / 2.0 * _q4d(e)
        sd = -mu * _p4dd(e) + lam / 2.0 * _q4dd(e)
    m = F.shape[0]
    H = (sd[:, None, None, None, None] * np.einsum("eij,ekl->eijkl", cof, cof)
         + s[:, None, None, None, None] * dcof)
    H = H.reshape(m, 9, 9)
    H[:, np.arange(9), np.arange(9)] += mu
    H = 0.5 * (H + np.transpose(H, (0, 2, 1)))
    return H[0] if single else H


def project_psd_batch(H):
    """Clamp the eigenvalues of symmetric matrices (m, k, k) to [0, inf)."""
    H = np.asarray(H, dtype=float)
    single = H.ndim == 2
    if single:
        H = H[None]
    w, V = np.linalg.eigh(H)
    w = np.maximum(w, 0.0)
    P = np.einsum("eik,ek,ejk->eij", V, w, V)
    P = 0.5 * (P + np.transpose(P, (0, 2, 1)))
    return P[0] if single else P


def energy_density(model, F):
    """Strain-energy density [J/m^3]; +inf for inverted Neo-Hookean."""
    return float(energy_density_batch(model, np.asarray(F, dtype=float)[None])[0])


def pk1(model, F):
    """First Piola-Kirchhoff stress dpsi/dF, a 3x3 matrix [Pa]."""
    return pk1_batch(model, np.asarray(F, dtype=float)[None])[0]


def dpdf(model, F):
    """Second derivative d^2 psi / dF^2 as a symmetric 9x9 matrix."""
    return dpdf_batch(model, F)


def project_dpdf(model, F):
    """Semidefinite projection of dpdf: eigenvalues clamped to [0, inf)."""
    return project_psd_batch(dpdf(model, F))
