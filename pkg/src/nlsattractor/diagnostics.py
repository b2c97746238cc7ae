"""Scalar functionals, energy-balance residuals and decay envelopes.

Inner products are those of the *real* Hilbert space L2 x R^2, i.e.
``<u, v> = Re int u conj(v)``.  All functionals are evaluated exactly for
retained-mode fields: quadratic terms in coefficient space, quartic terms
on the padded quadrature grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .integrator import Trajectory
from .nonlinearity import ConditionConstants, QuarticPotential, nonlinear_coeffs, potential_energy_coeffs
from .pumping import QuasiPeriodicPump, envelope_profile, pump_sup_norm
from .spectral import DomainSpec, SpectralField


def _inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a.real * b.real + a.imag * b.imag, axis=(-2, -1))


def inner_real(f: SpectralField, g: SpectralField) -> float:
    """``Re sum c(f) conj(c(g))``, the real L2 inner product."""
    if f.domain != g.domain:
        raise ValueError("fields live on different domains")
    return float(_inner(f.coeffs, g.coeffs))


def hamiltonian(f: SpectralField, potential: QuarticPotential) -> float:
    kinetic = 0.5 * float(_inner(f.domain.lam * f.coeffs, f.coeffs))
    return kinetic + float(potential_energy_coeffs(f.domain, f.coeffs, potential))


def _f_dot_psi(domain: DomainSpec, coeffs: np.ndarray, potential: QuarticPotential) -> np.ndarray:
    psi = domain.synthesize(coeffs, padded=True)
    r2 = psi.real**2 + psi.imag**2
    return domain.padded_weight * np.sum(potential.g(r2) * r2, axis=(-2, -1))


def phi_functional(f: SpectralField, t: float, potential: QuarticPotential, pump: QuasiPeriodicPump) -> float:
    """``H(psi) + <p(t), psi>``."""
    return hamiltonian(f, potential) + float(_inner(pump.coeffs_at(t), f.coeffs))


def psi_functional(f: SpectralField, t: float, potential: QuarticPotential, pump: QuasiPeriodicPump) -> float:
    """``U(psi) - <f(psi), psi>/2 + <p(t), psi>/2``."""
    u = float(potential_energy_coeffs(f.domain, f.coeffs, potential))
    fpsi = float(_f_dot_psi(f.domain, f.coeffs, potential))
    return u - 0.5 * fpsi + 0.5 * float(_inner(pump.coeffs_at(t), f.coeffs))


@dataclass(frozen=True)
class EnergySeries:
    """Per-sample functionals and balance terms of a trajectory."""

    t: np.ndarray
    l2: np.ndarray
    e_norm: np.ndarray
    kinetic: np.ndarray
    u: np.ndarray
    h: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    f_psi: np.ndarray  # <f(psi), psi>
    f_ip: np.ndarray  # <f(psi), i p(t)>
    grad_ip: np.ndarray  # <grad psi, i grad p(t)>
    pdot_psi: np.ndarray  # <dp/dt, psi>


def energy_series(traj: Trajectory) -> EnergySeries:
    domain = traj.domain
    params = traj.params
    pot, pump, gamma = params.potential, params.pump, params.gamma
    c = traj.coeffs
    if c.ndim != 3:
        raise ValueError("energy series needs a single-member trajectory")
    lam = domain.lam
    l2 = np.sqrt(_inner(c, c))
    e2 = _inner(lam * c, c)
    kinetic = 0.5 * e2
    u = potential_energy_coeffs(domain, c, pot)
    nl = nonlinear_coeffs(domain, c, pot)
    f_psi = _inner(nl, c)
    p = np.stack([pump.coeffs_at(t) for t in traj.times])
    pdot = np.stack([pump.derivative_coeffs_at(t) for t in traj.times])
    p_psi = _inner(p, c)
    h = kinetic + u
    return EnergySeries(
        t=np.asarray(traj.times, dtype=float),
        l2=l2,
        e_norm=np.sqrt(e2),
        kinetic=kinetic,
        u=u,
        h=h,
        phi=h + p_psi,
        psi=u - 0.5 * f_psi + 0.5 * p_psi,
        f_psi=f_psi,
        f_ip=_inner(nl, 1j * p),
        grad_ip=_inner(lam * c, 1j * p),
        pdot_psi=_inner(pdot, c),
    )


def _window(series: EnergySeries, window) -> EnergySeries:
    if window is None:
        return series
    lo, hi = window
    keep = (series.t >= lo) & (series.t <= hi)
    return EnergySeries(**{f.name: getattr(series, f.name)[keep] for f in fields(series)})


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))])


def _ddt(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    # centred in the interior, one-sided second order at the ends
    return np.gradient(y, t, edge_order=2)


def balance_residual(traj: Trajectory, window=None, gamma: float | None = None):
    """Residuals of the energy equation along a trajectory.

    Returns ``(differential, integral)``.  The differential residual is
    ``dH/dt - <-Lap psi + f(psi), -gamma psi - i p>`` with ``dH/dt`` from
    finite differences of the samples.  The integral residual is the
    weighted form

        1/2 [e^{2 gamma t} ||grad psi||^2]_0^T + [e^{2 gamma t} U]_0^T
          - int_0^T e^{2 gamma t} (2 gamma U - <f, gamma psi + i p> - <grad psi, i grad p>) dt

    accumulated with the trapezoid rule, one value per sample.
    """
    s = _window(energy_series(traj), window)
    if len(s.t) < 3:
        raise ValueError("balance residual needs at least 3 samples")
    gamma = traj.params.gamma if gamma is None else gamma
    rhs = -gamma * 2.0 * s.kinetic - gamma * s.f_psi - s.grad_ip - s.f_ip
    return _ddt(s.h, s.t) - rhs, _balance_integral(s, gamma)


def _balance_integral(s: EnergySeries, gamma: float) -> np.ndarray:
    e2 = 2.0 * s.kinetic
    w = np.exp(2.0 * gamma * (s.t - s.t[0]))
    lhs = 0.5 * (w * e2 - e2[0])
    integrand = w * (2.0 * gamma * s.u - gamma * s.f_psi - s.f_ip - s.grad_ip)
    return lhs + (w * s.u - s.u[0]) - _cumtrapz(integrand, s.t)


def phi_ode_residual(traj: Trajectory, window=None):
    """Residuals of ``dPhi/dt = -2 gamma Phi + 2 gamma Psi + <p', psi>``.

    Returns ``(differential, integral)``; the integral form is

        Phi(t) - e^{-2 gamma t} Phi(0) - int_0^t e^{-2 gamma (t - s)} (2 gamma Psi + <p', psi>) ds.
    """
    s = _window(energy_series(traj), window)
    if len(s.t) < 3:
        raise ValueError("phi residual needs at least 3 samples")
    gamma = traj.params.gamma
    source = 2.0 * gamma * s.psi + s.pdot_psi
    return _ddt(s.phi, s.t) - (-2.0 * gamma * s.phi + source), _phi_integral(s, gamma)


def _phi_integral(s: EnergySeries, gamma: float) -> np.ndarray:
    source = 2.0 * gamma * s.psi + s.pdot_psi
    decay = np.exp(-2.0 * gamma * (s.t - s.t[0]))
    return s.phi - decay * (s.phi[0] + _cumtrapz(source / decay, s.t))


def _integral_residuals(traj: Trajectory, s: EnergySeries):
    gamma = traj.params.gamma
    return _balance_integral(s, gamma), _phi_integral(s, gamma)


@dataclass(frozen=True)
class EnergySample:
    t: float
    l2: float
    e_norm: float
    kinetic: float
    u: float
    h: float
    phi: float
    psi: float
    balance_residual: float
    phi_residual: float


CSV_COLUMNS = tuple(f.name for f in fields(EnergySample))


def energy_samples(traj: Trajectory) -> list[EnergySample]:
    """One row per trajectory sample.

    The residual columns hold the differential residuals.  With fewer than
    three samples no derivative can be formed and the integral residuals
    are written instead (identically zero at the first sample).
    """
    s = energy_series(traj)
    if len(s.t) >= 3:
        bal, _ = balance_residual(traj)
        phr, _ = phi_ode_residual(traj)
    else:
        bal, phr = _integral_residuals(traj, s)
    return [
        EnergySample(
            float(s.t[n]), float(s.l2[n]), float(s.e_norm[n]), float(s.kinetic[n]), float(s.u[n]),
            float(s.h[n]), float(s.phi[n]), float(s.psi[n]), float(bal[n]), float(phr[n]),
        )
        for n in range(len(s.t))
    ]


@dataclass(frozen=True)
class DecayEnvelope:
    """Constants of the a priori bounds.

    ``H(t) <= H(0) exp(-alpha_plus t) + D`` and
    ``||psi(t)||_E^2 <= C0 exp(-alpha_plus t) + D0`` for ``t >= 0``;
    ``alpha_minus``/``C_minus`` give the backward-time growth bound
    ``H(-s) <= H(0) e^{alpha_minus s} + C_minus (e^{alpha_minus s} - 1) / alpha_minus``.
    """

    alpha_plus: float
    alpha_minus: float
    C0: float
    D0: float
    D: float
    C1: float
    C_minus: float


def decay_envelope(
    consts: ConditionConstants, gamma: float, pump: QuasiPeriodicPump, H0: float = 0.0
) -> DecayEnvelope:
    """Trace the energy inequalities with explicit constants.

    Every Young-inequality split is made with an explicit weight, so the
    returned ``D`` is a genuine (if pessimistic) bound for the given
    potential constants, pump and rectangle rather than a fitted value.
    """
    if not gamma > 0:
        raise ValueError("decay envelope requires gamma>0")
    k1, k2, k3 = consts.kappa1, consts.kappa2, consts.kappa3
    b1 = max(consts.b1, 0.0)
    b2 = max(consts.b2, 0.0)
    area = pump.domain.area
    p0 = pump_sup_norm(pump)
    P = envelope_profile(pump)
    w = pump.domain.padded_weight
    p_l1 = float(w * np.sum(P))
    p_l4 = float(w * np.sum(P**4))

    alpha_plus = 0.5 * gamma * min(3.0, k2)
    eta = 2.0 * gamma * k1 * k2 / (3.0 * k3)
    # |<f, ip>| <= (gamma k2 / 2) (U + b1 |Omega|) + k3 ||p||_1 + k3 ||p||_4^4 / (4 eta^3)
    pump_terms = k3 * p_l1 + k3 * p_l4 / (4.0 * eta**3)
    C1 = (
        gamma * b2 * area
        + p0**2 / gamma
        + pump_terms
        + 0.5 * gamma * k2 * b1 * area
        + (0.5 * gamma * k2 - alpha_plus) * b1 * area
    )
    D = C1 / alpha_plus
    D0 = 2.0 * (D + b1 * area)
    C0 = 2.0 * max(H0, 0.0)

    # backward time: |<f, psi>| <= (5 k3 / (4 k1)) U + (3/4 + 5 b1 / (4 k1)) k3 |Omega|
    u_coef = gamma * (5.0 * k3 / (4.0 * k1) + 0.5 * k2)
    alpha_minus = max(2.5 * gamma, u_coef)
    C_minus = (
        gamma * (0.75 + 1.25 * b1 / k1) * k3 * area
        + p0**2 / gamma
        + pump_terms
        + 0.5 * gamma * k2 * b1 * area
        + (alpha_minus - u_coef) * b1 * area
    )
    return DecayEnvelope(alpha_plus, alpha_minus, C0, D0, D, C1, C_minus)


@dataclass(frozen=True)
class EnvelopeReport:
    violations: int
    margin: float  # min over samples of bound - H (>= 0 when no violation)
    max_excess: float
    D_empirical: float  # smallest D making the H envelope hold on this run
    e_violations: int


def envelope_check(
    traj: Trajectory, env: DecayEnvelope, potential: QuarticPotential | None = None,
    pump: QuasiPeriodicPump | None = None, rtol: float = 1e-12,
) -> EnvelopeReport:
    """Compare ``H(t)`` and ``||psi(t)||_E^2`` with the forward envelope."""
    s = energy_series(traj)
    tau = s.t - s.t[0]
    decay = np.exp(-env.alpha_plus * tau)
    bound = s.h[0] * decay + env.D
    slack = rtol * max(1.0, abs(s.h[0]), env.D)
    excess = s.h - bound
    e_bound = 2.0 * max(s.h[0], 0.0) * decay + env.D0
    e_excess = s.e_norm**2 - e_bound
    return EnvelopeReport(
        violations=int(np.sum(excess > slack)),
        margin=float(-np.max(excess)),
        max_excess=float(max(np.max(excess), 0.0)),
        D_empirical=float(max(np.max(s.h - s.h[0] * decay), 0.0)),
        e_violations=int(np.sum(e_excess > rtol * max(1.0, e_bound.max()))),
    )


@dataclass(frozen=True)
class BackwardReport:
    finite: bool
    alpha_minus_fit: float
    C_fit: float
    violations_fit: int
    violations_apriori: int
    h_max: float


def backward_fit(traj: Trajectory, env: DecayEnvelope, C: float | None = None) -> BackwardReport:
    """Fit a growth rate to a backward run and test both backward envelopes.

    The fitted envelope is ``H(0) e^{alpha s} + C`` with ``s = |t - t0|``
    and ``C`` defaulting to 0 (the most demanding choice); ``alpha`` is the smallest rate
    making it hold at every sample.  The a priori envelope uses the traced
    ``alpha_minus`` and ``C_minus`` of ``env``.
    """
    s = energy_series(traj)
    finite = bool(np.all(np.isfinite(s.h)))
    svals = np.abs(s.t - s.t[0])
    h0 = s.h[0]
    C = 0.0 if C is None else C
    rates = []
    for sv, hv in zip(svals[1:], s.h[1:]):
        if hv - C > 0 and h0 > 0:
            rates.append(math.log((hv - C) / h0) / sv)
    alpha_fit = max(rates + [0.0])
    fit_bound = h0 * np.exp(alpha_fit * svals) + C
    slack = 1e-10 * np.maximum(1.0, np.abs(fit_bound))
    a, cm = env.alpha_minus, env.C_minus
    apriori = h0 * np.exp(a * svals) + cm * np.expm1(a * svals) / a
    return BackwardReport(
        finite=finite,
        alpha_minus_fit=float(alpha_fit),
        C_fit=float(C),
        violations_fit=int(np.sum(s.h > fit_bound + slack)),
        violations_apriori=int(np.sum(s.h > apriori + 1e-10 * np.maximum(1.0, np.abs(apriori)))),
        h_max=float(np.max(s.h)),
    )
