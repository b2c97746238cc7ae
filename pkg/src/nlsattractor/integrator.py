"""Time integration of the Galerkin system

    i c' = Lam c - i gamma c + P_m f(psi_m) + p_m(t)

Default scheme is Strang splitting ``A(h/2) B(h) A(h/2)``:

* ``B`` is the exact flow of ``c' = (-i Lam - gamma) c - i p_m(t)``.  The
  pump integral is evaluated in closed form per mode and per pump
  frequency, so the damping factor and the forcing are exact.
* ``A`` is the nonlinear subflow ``i c' = P_m f(psi_m)``.  That subflow
  conserves ``||c||`` (``f`` is a real multiple of ``psi``), and ``A`` is
  the implicit midpoint rule, which conserves quadratic invariants and
  is symmetric, so the composition stays second order while the L2 norm
  decays exactly like ``exp(-gamma t)`` without a pump.

``rk4_reference`` (classical RK4 on the full right-hand side) is kept as
an independent oracle; it is never the default.

All kernels accept coefficient arrays with leading batch dimensions so
that ensembles advance together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nonlinearity import QuarticPotential, nonlinear_coeffs
from .pumping import QuasiPeriodicPump
from .spectral import DomainSpec, SpectralField

SCHEMES = ("strang_split", "rk4_reference")
BLOWUP_E_NORM = 1e8

_MIDPOINT_TOL = 1e-14
_MIDPOINT_MAX_ITER = 60
_MAX_SPLIT_DEPTH = 24


class BlowUpError(RuntimeError):
    """Raised when the state becomes non-finite or leaves the sane range."""

    def __init__(self, message: str, step: int | None = None, t: float | None = None):
        super().__init__(message)
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SolverParams:
    gamma: float
    potential: QuarticPotential
    pump: QuasiPeriodicPump
    dt: float
    scheme: str = "strang_split"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def domain(self) -> DomainSpec:
        return self.pump.domain

    def replace(self, **changes) -> "SolverParams":
        fields = dict(gamma=self.gamma, potential=self.potential, pump=self.pump, dt=self.dt, scheme=self.scheme)
        fields.update(changes)
        return SolverParams(**fields)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution; ``coeffs[n]`` is the state at ``times[n]``.

    For ensembles ``coeffs`` has shape ``(n_samples, batch, Mx, My)``.
    """

    domain: DomainSpec
    params: SolverParams
    times: np.ndarray
    coeffs: np.ndarray

    def __len__(self):
        return len(self.times)

    def state(self, n: int) -> SpectralField:
        return SpectralField(self.domain, self.coeffs[n])

    @property
    def samples(self) -> list[tuple[float, SpectralField]]:
        return [(float(t), self.state(n)) for n, t in enumerate(self.times)]

    @property
    def final(self) -> SpectralField:
        return self.state(-1)

    def member(self, b: int) -> "Trajectory":
        return Trajectory(self.domain, self.params, self.times, self.coeffs[:, b])


def _phi1(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < 1e-300
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0, np.expm1(xs) / xs)


class _LinearFlow:
    """Exact flow of the linear, damped, pumped part over a fixed step ``h``."""

    def __init__(self, params: SolverParams, h: float):
        domain = params.domain
        z = -1j * domain.lam - params.gamma
        self.h = h
        self.decay = np.exp(z * h)
        pump = params.pump
        self.pump = pump
        if pump.modes:
            x = (1j * pump.omegas[:, None, None] - z[None]) * h
            # int_0^h exp(z (h - s)) exp(i w s) ds = h exp(z h) phi1((i w - z) h)
            self.kernel = -1j * pump.profiles * (h * self.decay[None] * _phi1(x))
        else:
            self.kernel = None

    def __call__(self, c: np.ndarray, t: float) -> np.ndarray:
        out = self.decay * c
        if self.kernel is not None:
            out = out + np.tensordot(self.pump.factors(t), self.kernel, axes=1)
        return out


def _midpoint_once(domain, c, h, potential):
    """One implicit-midpoint step for ``i c' = P f``; returns None on failure."""
    m = c
    prev_err = np.inf
    ref = np.sqrt(np.sum(np.abs(c) ** 2, axis=(-2, -1))) + 1e-300
    for it in range(_MIDPOINT_MAX_ITER):
        with np.errstate(over="ignore", invalid="ignore"):
            # a diverging iterate is detected below and triggers step halving
            m_new = c - 0.5j * h * nonlinear_coeffs(domain, m, potential)
            err = np.max(np.sqrt(np.sum(np.abs(m_new - m) ** 2, axis=(-2, -1))) / ref)
        m = m_new
        if not np.isfinite(err):
            return None
        if err <= _MIDPOINT_TOL:
            return 2.0 * m - c
        if it > 4 and err > 0.9 * prev_err:
            if err <= 1e3 * _MIDPOINT_TOL:
                # round-off stagnation, not divergence
                return 2.0 * m - c
            return None
        prev_err = err
    return None


def nonlinear_substep(domain: DomainSpec, c: np.ndarray, h: float, potential: QuarticPotential, depth: int = 0):
    """Norm-conserving symmetric step of the nonlinear subflow over ``h``.

    Falls back to recursive halving when the fixed-point iteration for
    the midpoint equation does not contract.
    """
    if potential.a2 == 0 and potential.a1 == 0:
        return c
    if depth == 0 and not np.all(np.isfinite(c)):
        raise BlowUpError("non-finite state entering the nonlinear substep")
    out = _midpoint_once(domain, c, h, potential)
    if out is not None:
        return out
    if depth >= _MAX_SPLIT_DEPTH:
        raise BlowUpError("nonlinear substep failed to converge")
    half = nonlinear_substep(domain, c, 0.5 * h, potential, depth + 1)
    return nonlinear_substep(domain, half, 0.5 * h, potential, depth + 1)


def rhs_coeffs(c: np.ndarray, t: float, params: SolverParams) -> np.ndarray:
    domain = params.domain
    forcing = nonlinear_coeffs(domain, c, params.potential) + params.pump.coeffs_at(t)
    return (-1j * domain.lam - params.gamma) * c - 1j * forcing


def rhs(state: SpectralField, t: float, params: SolverParams) -> SpectralField:
    """Time derivative ``-i Lam c - gamma c - i (P_m f(psi) + p_m(t))``."""
    return SpectralField(state.domain, rhs_coeffs(state.coeffs, t, params))


class _Stepper:
    def __init__(self, params: SolverParams):
        self.params = params
        self._flows: dict[float, _LinearFlow] = {}

    def flow(self, h: float) -> _LinearFlow:
        fl = self._flows.get(h)
        if fl is None:
            fl = self._flows[h] = _LinearFlow(self.params, h)
        return fl

    def strang(self, c: np.ndarray, t: float, h: float) -> np.ndarray:
        p = self.params
        c = nonlinear_substep(p.domain, c, 0.5 * h, p.potential)
        c = self.flow(h)(c, t)
        return nonlinear_substep(p.domain, c, 0.5 * h, p.potential)

    def rk4(self, c: np.ndarray, t: float, h: float) -> np.ndarray:
        p = self.params
        k1 = rhs_coeffs(c, t, p)
        k2 = rhs_coeffs(c + 0.5 * h * k1, t + 0.5 * h, p)
        k3 = rhs_coeffs(c + 0.5 * h * k2, t + 0.5 * h, p)
        k4 = rhs_coeffs(c + h * k3, t + h, p)
        return c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def __call__(self, c, t, h):
        if self.params.scheme == "strang_split":
            return self.strang(c, t, h)
        return self.rk4(c, t, h)


def step_strang(state: SpectralField, t: float, params: SolverParams) -> SpectralField:
    return SpectralField(state.domain, _Stepper(params).strang(state.coeffs, t, params.dt))


def step_rk4(state: SpectralField, t: float, params: SolverParams) -> SpectralField:
    return SpectralField(state.domain, _Stepper(params).rk4(state.coeffs, t, params.dt))


def _check_finite(domain: DomainSpec, c: np.ndarray, step: int, t: float):
    e2 = np.sum(domain.lam * (c.real**2 + c.imag**2), axis=(-2, -1))
    if not np.all(np.isfinite(e2)):
        raise BlowUpError(f"non-finite state at step {step} (t={t:.6g})", step, t)
    if np.any(e2 > BLOWUP_E_NORM**2):
        raise BlowUpError(f"energy norm exceeded {BLOWUP_E_NORM:g} at step {step} (t={t:.6g})", step, t)


def evolve_coeffs(c0: np.ndarray, t0: float, t1: float, params: SolverParams, sample_every: int = 10):
    """Integrate raw coefficients from ``t0`` to ``t1`` (either direction).

    Returns ``(times, coeffs)`` with the initial state, every
    ``sample_every``-th step and the final state.  The last step is
    shortened to land exactly on ``t1``.
    """
    if t1 == t0:
        raise ValueError("t1 must differ from t0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    domain = params.domain
    c = np.array(c0, dtype=complex)
    if c.shape[-2:] != domain.shape:
        raise ValueError("state does not match the solver domain")
    span = abs(t1 - t0)
    sign = 1.0 if t1 > t0 else -1.0
    h = sign * params.dt
    n_full = int(math.floor(span / params.dt * (1 + 1e-12)))
    rest = span - n_full * params.dt
    steps = [h] * n_full
    if rest > 1e-9 * params.dt:
        steps.append(sign * rest)
    stepper = _Stepper(params)

    times = [t0]
    states = [c.copy()]
    t = t0
    for n, hn in enumerate(steps, start=1):
        try:
            c = stepper(c, t, hn)
        except BlowUpError as exc:
            raise BlowUpError(f"{exc} at step {n} (t={t:.6g})", n, t) from None
        t = t0 + (n - 1) * h + hn if n == len(steps) else t0 + n * h
        _check_finite(domain, c, n, t)
        if n % sample_every == 0 or n == len(steps):
            times.append(t)
            states.append(c.copy())
    if times[-1] != t1:
        times[-1] = t1
    return np.array(times), np.array(states)


def evolve(
    state0: SpectralField, t0: float, t1: float, params: SolverParams, sample_every: int = 10
) -> Trajectory:
    """Solve from ``t0`` to ``t1``; ``t1 < t0`` runs the equation backward.

    A backward run integrates the time-reversed equation, where damping
    turns into anti-damping; it is meant for short growth diagnostics.
    """
    if state0.domain != params.domain:
        raise ValueError("state and pump live on different domains")
    times, coeffs = evolve_coeffs(state0.coeffs, t0, t1, params, sample_every)
    return Trajectory(params.domain, params, times, coeffs)


def evolve_ensemble(
    states: list[SpectralField], t0: float, t1: float, params: SolverParams, sample_every: int = 10
) -> Trajectory:
    """Advance several initial states together; ``coeffs`` gains a batch axis."""
    c0 = np.stack([s.coeffs for s in states])
    times, coeffs = evolve_coeffs(c0, t0, t1, params, sample_every)
    return Trajectory(params.domain, params, times, coeffs)
