"""Quartic potential U, its gradient f and the Galerkin nonlinear term.

Complex numbers are identified with real 2-vectors, so ``f = grad U`` is
again a complex number and ``f'`` a real symmetric 2x2 matrix.  For

    U(psi) = a2 |psi|^4 + a1 |psi|^2 + a0

the gradient is ``f(psi) = (4 a2 |psi|^2 + 2 a1) psi``, a real multiple
of ``psi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import DomainSpec, SpectralField


@dataclass(frozen=True)
class QuarticPotential:
    a2: float
    a1: float = 0.0
    a0: float = 0.0

    def __post_init__(self):
        # a2 == 0 is kept as the linear limit used by closed-form checks;
        # condition_constants() still insists on a2 > 0.
        if self.a2 < 0:
            raise ValueError("defocusing requires a2>0")

    def g(self, r2):
        """Real multiplier of ``psi`` in ``f``, as a function of ``|psi|^2``."""
        return 4.0 * self.a2 * r2 + 2.0 * self.a1


def potential_value(p: QuarticPotential, psi):
    r2 = np.abs(psi) ** 2
    return p.a2 * r2 * r2 + p.a1 * r2 + p.a0


def f_value(p: QuarticPotential, psi):
    psi = np.asarray(psi)
    return p.g(np.abs(psi) ** 2) * psi


def f_jacobian(p: QuarticPotential, psi) -> np.ndarray:
    """Hessian of U in the real coordinates ``(Re psi, Im psi)``.

    Vectorised over ``psi``; the result has shape ``psi.shape + (2, 2)``.
    """
    psi = np.asarray(psi, dtype=complex)
    x, y = psi.real, psi.imag
    r2 = x * x + y * y
    diag = p.g(r2)
    J = np.empty(psi.shape + (2, 2))
    J[..., 0, 0] = diag + 8.0 * p.a2 * x * x
    J[..., 1, 1] = diag + 8.0 * p.a2 * y * y
    off = 8.0 * p.a2 * x * y
    J[..., 0, 1] = off
    J[..., 1, 0] = off
    return J


def f_second(p: QuarticPotential, psi) -> np.ndarray:
    """Third derivatives ``d_j d_k f_i`` of U, shape ``psi.shape + (2, 2, 2)``."""
    psi = np.asarray(psi, dtype=complex)
    v = np.stack([psi.real, psi.imag], axis=-1)
    eye = np.eye(2)
    T = (
        np.einsum("...k,ij->...ijk", v, eye)
        + np.einsum("...j,ik->...ijk", v, eye)
        + np.einsum("...i,jk->...ijk", v, eye)
    )
    return 8.0 * p.a2 * T


@dataclass(frozen=True)
class ConditionConstants:
    """Structure constants for the growth/coercivity conditions on U.

    ``kappa1 |psi|^4 - b1 <= U <= upper_C (1 + |psi|^4)``,
    ``Re f conj(psi) >= kappa2 U - b2``, ``|f| <= kappa3 (1 + |psi|^3)``,
    ``|f'| <= kappa4 (1 + |psi|^2)``, ``f' >= -b3``,
    ``|f''| <= kappa5 (1 + |psi|)``.  Matrix norms are spectral, the
    third-derivative norm is Frobenius.
    """

    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float
    kappa5: float
    b1: float
    b2: float
    b3: float
    upper_C: float


def condition_constants(p: QuarticPotential) -> ConditionConstants:
    """Closed-form constants for the quartic family (requires a2 > 0)."""
    if not p.a2 > 0:
        raise ValueError("defocusing requires a2>0")
    a2, a1, a0 = p.a2, p.a1, p.a0
    # lower quartic bound; with a1 < 0 half of a2 r^2 absorbs a1 r
    if a1 >= 0:
        kappa1, b1 = a2, max(0.0, -a0)
    else:
        kappa1, b1 = a2 / 2.0, max(0.0, a1 * a1 / (2.0 * a2) - a0)
    upper_C = max(a2 + abs(a1) / 2.0, abs(a0) + abs(a1) / 2.0)
    # Re f conj(psi) = 4 a2 r^2 + 2 a1 r with r = |psi|^2
    if a1 <= 0:
        kappa2, b2 = 4.0, max(0.0, 4.0 * a0)
    else:
        kappa2, b2 = 3.0, max(0.0, a1 * a1 / (4.0 * a2) + 3.0 * a0)
    kappa3 = 4.0 * a2 + 2.0 * abs(a1)
    kappa4 = max(12.0 * a2, 2.0 * abs(a1))
    b3 = max(0.0, -2.0 * a1)
    kappa5 = 16.0 * math.sqrt(3.0) * a2
    return ConditionConstants(kappa1, kappa2, kappa3, kappa4, kappa5, b1, b2, b3, upper_C)


def verify_condition_constants(
    p: QuarticPotential,
    c: ConditionConstants,
    r_max: float = 1e3,
    n_radii: int = 4001,
    n_angles: int = 16,
    rtol: float = 1e-12,
) -> dict[str, float]:
    """Sample all six conditions on a polar grid with ``|psi| <= r_max``.

    Returns the worst normalised excess per condition; a value ``<= 0``
    means the condition held at every sample (``rtol`` absorbs round-off
    at ``|psi| ~ 1e3`` where the quartic terms are ``~1e12``).
    """
    r = np.concatenate([np.linspace(0.0, 10.0, n_radii), np.geomspace(10.0, r_max, n_radii)])
    theta = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    psi = (r[:, None] * np.exp(1j * theta[None, :])).ravel()
    rho = np.abs(psi)
    U = potential_value(p, psi)
    f = f_value(p, psi)
    J = f_jacobian(p, psi)
    eig = np.linalg.eigvalsh(J)
    jac_norm = np.max(np.abs(eig), axis=-1)
    T = f_second(p, psi)
    t_norm = np.sqrt(np.sum(T * T, axis=(-3, -2, -1)))

    def excess(lhs, rhs):
        scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
        return float(np.max((lhs - rhs) / scale) - rtol)

    return {
        "U1_lower": excess(c.kappa1 * rho**4 - c.b1, U),
        "U1_upper": excess(U, c.upper_C * (1 + rho**4)),
        "U2": excess(c.kappa2 * U - c.b2, (f * np.conj(psi)).real),
        "U3": excess(np.abs(f), c.kappa3 * (1 + rho**3)),
        "U4": excess(jac_norm, c.kappa4 * (1 + rho**2)),
        "U5": excess(-c.b3 * np.ones_like(rho), eig[:, 0]),
        "U6": excess(t_norm, c.kappa5 * (1 + rho)),
    }


def nonlinear_coeffs(domain: DomainSpec, coeffs: np.ndarray, p: QuarticPotential) -> np.ndarray:
    """``P_m f(psi)`` for raw coefficient arrays (batch dimensions allowed)."""
    psi = domain.synthesize(coeffs, padded=True)
    return domain.analyze(p.g(psi.real**2 + psi.imag**2) * psi, padded=True)


def apply_nonlinearity(f: SpectralField, p: QuarticPotential) -> SpectralField:
    """Galerkin nonlinear term ``P_m f(psi)``.

    ``f`` is evaluated pointwise on the padded quadrature grid and
    projected back onto the retained modes.  The padded rule is exact
    for the degree-four integrands involved, so this equals the exact
    projection of the continuous ``f(psi)``.
    """
    return SpectralField(f.domain, nonlinear_coeffs(f.domain, f.coeffs, p))


def potential_energy_coeffs(domain: DomainSpec, coeffs: np.ndarray, p: QuarticPotential) -> np.ndarray:
    psi = domain.synthesize(coeffs, padded=True)
    U = potential_value(p, psi)
    Px, Py = domain.padded_shape
    # boundary nodes carry psi = 0, i.e. U = a0, and count with half/quarter weight
    boundary = p.a0 * domain.area * (1.0 - (Px - 1) * (Py - 1) / (Px * Py))
    return domain.padded_weight * np.sum(U, axis=(-2, -1)) + boundary


def potential_energy(f: SpectralField, p: QuarticPotential) -> float:
    """``int U(psi) dx`` by the padded quadrature rule."""
    return float(potential_energy_coeffs(f.domain, f.coeffs, p))
