"""Quasi-periodic pumping ``p(x, t) = sum_j q_j(x) exp(i (w_j t + phi_j))``.

Finite trigonometric polynomials in ``t`` are uniformly almost periodic
and have closed-form translates and derivatives, which is all the
attractor machinery needs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import DomainSpec, SpectralField, sobolev_norm


@dataclass(frozen=True)
class PumpMode:
    profile: SpectralField
    omega: float = 0.0
    phase: float = 0.0


@dataclass(frozen=True)
class QuasiPeriodicPump:
    domain: DomainSpec
    modes: tuple[PumpMode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        for mode in self.modes:
            if mode.profile.domain != self.domain:
                raise ValueError("pump profile is not in the retained-mode space of the domain")

    @cached_property
    def profiles(self) -> np.ndarray:
        """Stacked profile coefficients, shape ``(J, Mx, My)``."""
        if not self.modes:
            return np.zeros((0,) + self.domain.shape, dtype=complex)
        return np.stack([m.profile.coeffs for m in self.modes])

    @cached_property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes], dtype=float)

    @cached_property
    def phases(self) -> np.ndarray:
        return np.array([m.phase for m in self.modes], dtype=float)

    def factors(self, t: float) -> np.ndarray:
        """Unit-modulus time factors ``exp(i (w_j t + phi_j))``."""
        return np.exp(1j * (self.omegas * t + self.phases))

    def coeffs_at(self, t: float) -> np.ndarray:
        if not self.modes:
            return np.zeros(self.domain.shape, dtype=complex)
        return np.tensordot(self.factors(t), self.profiles, axes=1)

    def derivative_coeffs_at(self, t: float) -> np.ndarray:
        if not self.modes:
            return np.zeros(self.domain.shape, dtype=complex)
        return np.tensordot(1j * self.omegas * self.factors(t), self.profiles, axes=1)

    def restricted(self, domain: DomainSpec) -> "QuasiPeriodicPump":
        """Project every profile onto another mode cut (``p_m = P_m p``)."""
        return QuasiPeriodicPump(
            domain, tuple(PumpMode(m.profile.resized(domain), m.omega, m.phase) for m in self.modes)
        )


def zero_pump(domain: DomainSpec) -> QuasiPeriodicPump:
    return QuasiPeriodicPump(domain, ())


def pump_eval(pump: QuasiPeriodicPump, t: float) -> SpectralField:
    return SpectralField(pump.domain, pump.coeffs_at(t))


def pump_derivative(pump: QuasiPeriodicPump, t: float) -> SpectralField:
    """Exact time derivative of the pump at ``t``."""
    return SpectralField(pump.domain, pump.derivative_coeffs_at(t))


def pump_sup_norm(pump: QuasiPeriodicPump) -> float:
    """Upper bound ``sum_j ||q_j||_E`` on ``sup_t ||p(t)||_E``.

    Exact for a single mode; for several modes with incommensurate
    frequencies it is the supremum approached but generally not attained.
    """
    return float(sum(sobolev_norm(m.profile, 1.0) for m in pump.modes))


def pump_translate(pump: QuasiPeriodicPump, tau: float) -> QuasiPeriodicPump:
    """Translate in time: the result evaluated at ``t`` equals ``pump(t + tau)``."""
    return QuasiPeriodicPump(
        pump.domain, tuple(PumpMode(m.profile, m.omega, m.phase + m.omega * tau) for m in pump.modes)
    )


def envelope_profile(pump: QuasiPeriodicPump, padded: bool = True) -> np.ndarray:
    """Pointwise bound ``sum_j |q_j(x)|`` on ``|p(x, t)|`` for all ``t``."""
    if not pump.modes:
        shape = pump.domain.padded_shape if padded else (pump.domain.Nx, pump.domain.Ny)
        return np.zeros((shape[0] - 1, shape[1] - 1))
    vals = pump.domain.synthesize(pump.profiles, padded=padded)
    return np.sum(np.abs(vals), axis=0)
