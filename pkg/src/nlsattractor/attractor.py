"""Absorbing ball, pullback ensembles, Galerkin refinement and
continuous-dependence checks.

The uniform attractor itself is not computable; what is computed are
pullback images ``S_p(t_obs, -tau) B`` of a finite seed set for a ladder
of ``tau`` and the one-sided Hausdorff distances between them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import DecayEnvelope
from .integrator import SolverParams, Trajectory, evolve_coeffs
from .spectral import DomainSpec, SpectralField, random_field, sobolev_norm


@dataclass(frozen=True)
class AbsorbingBall:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("absorbing ball radius must be positive")

    @classmethod
    def from_envelope(cls, env: DecayEnvelope) -> "AbsorbingBall":
        return cls(math.sqrt(env.D0 + 1.0))


@dataclass(frozen=True, eq=False)
class EnsembleSnapshot:
    t: float
    members: list[SpectralField]
    pump_origin: float

    def __post_init__(self):
        if len({m.domain for m in self.members}) > 1:
            raise ValueError("ensemble members must share one domain")

    @property
    def diameter(self) -> float:
        c = _as_array(self.members)
        d = _pairwise_e(self.members[0].domain, c, c)
        return float(d.max()) if d.size else 0.0


def _as_array(fields) -> np.ndarray:
    return np.stack([f.coeffs for f in fields])


def _pairwise_e(domain: DomainSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None] - B[None, :]
    return np.sqrt(np.sum(domain.lam * (diff.real**2 + diff.imag**2), axis=(-2, -1)))


def absorbing_entry_time(traj: Trajectory, ball: AbsorbingBall):
    """First sample time after which the E-norm stays within the ball, else None."""
    c = traj.coeffs
    e = np.sqrt(np.sum(traj.domain.lam * np.abs(c) ** 2, axis=(-2, -1)))
    outside = np.nonzero(e > ball.radius)[0]
    if outside.size == 0:
        return float(traj.times[0])
    last = outside[-1]
    if last == len(e) - 1:
        return None
    return float(traj.times[last + 1])


def hausdorff_E(A: list[SpectralField], B: list[SpectralField]) -> float:
    """One-sided distance ``sup_{a in A} inf_{b in B} ||a - b||_E``."""
    if not A or not B:
        raise ValueError("hausdorff_E needs nonempty sets")
    domain = A[0].domain
    if any(f.domain != domain for f in list(A) + list(B)):
        raise ValueError("fields live on different domains")
    d = _pairwise_e(domain, _as_array(A), _as_array(B))
    return float(d.min(axis=1).max())


def seed_set(domain: DomainSpec, rng: np.random.Generator, radius: float, n: int = 16) -> list[SpectralField]:
    """Gaussian fields with E-norms ``radius * u``, ``u`` uniform in (0, 1]."""
    out = []
    for _ in range(n):
        u = 1.0 - rng.random()
        out.append(random_field(domain, rng, radius * u))
    return out


def _final_images(params: SolverParams, seeds, t_start: float, t_end: float) -> list[SpectralField]:
    c0 = _as_array(seeds)
    _, coeffs = evolve_coeffs(c0, t_start, t_end, params, sample_every=1 << 30)
    return [SpectralField(params.domain, c) for c in coeffs[-1]]


def pullback_ensemble(
    params: SolverParams, seed_set: list[SpectralField], tau_list, t_obs: float = 0.0
) -> list[EnsembleSnapshot]:
    """Images ``S_p(t_obs, -tau) seeds`` for each ``tau`` in the ladder.

    ``tau = 0`` with ``t_obs > 0`` evolves the seeds over ``[0, t_obs]``;
    ``tau = 0`` with ``t_obs = 0`` returns the seeds themselves.
    """
    taus = list(tau_list)
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau_list must be increasing")
    out = []
    for tau in taus:
        if t_obs + tau == 0:
            members = list(seed_set)
        else:
            members = _final_images(params, seed_set, -tau, t_obs)
        out.append(EnsembleSnapshot(t_obs, members, tau))
    return out


def pullback_distances(snapshots: list[EnsembleSnapshot]) -> list[float]:
    """``hausdorff_E(A_{tau_{k+1}}, A_{tau_k})`` along the ladder."""
    return [hausdorff_E(b.members, a.members) for a, b in zip(snapshots, snapshots[1:])]


def attraction_profile(
    params: SolverParams, fresh: list[SpectralField], target: EnsembleSnapshot, horizons
) -> list[float]:
    """Distance from ``S_p(t_obs, t_obs - t) fresh`` to ``target`` for each horizon ``t``."""
    t_obs = target.t
    return [
        hausdorff_E(_final_images(params, fresh, t_obs - t, t_obs), target.members) for t in horizons
    ]


@dataclass(frozen=True)
class GalerkinTable:
    cuts: list[tuple[int, int]]
    s_values: list[float]
    diffs: dict[float, list[float]]  # s -> sup_t ||psi_m - psi_m'||_{H^s}, consecutive pairs
    times: np.ndarray


def galerkin_convergence_study(
    params: SolverParams, ic: SpectralField, m_list, T: float, s=0.5, sample_every: int = 10
) -> GalerkinTable:
    """Run the Galerkin system at increasing mode cuts and compare consecutive cuts.

    Every cut starts from ``P_m ic`` with pump ``P_m p`` on the same
    rectangle and collocation grid; differences are taken after
    zero-extension to the larger cut and maximised over sample times.
    """
    s_values = [float(s)] if np.isscalar(s) else [float(v) for v in s]
    if any(v >= 1 for v in s_values):
        raise ValueError("Galerkin convergence is measured in H^s with s < 1")
    cuts = [(m, m) if np.isscalar(m) else tuple(m) for m in m_list]
    base = ic.domain
    runs = []
    times = None
    for Mx, My in cuts:
        dom = base.with_modes(Mx, My)
        p = params.replace(pump=params.pump.restricted(dom))
        tt, cc = evolve_coeffs(ic.resized(dom).coeffs, 0.0, T, p, sample_every)
        times = tt
        runs.append((dom, cc))
    diffs = {v: [] for v in s_values}
    for (d1, c1), (d2, c2) in zip(runs, runs[1:]):
        ext = np.zeros(c2.shape, dtype=complex)
        ext[:, : d1.Mx, : d1.My] = c1
        delta = np.abs(ext - c2) ** 2
        for v in s_values:
            diffs[v].append(float(np.sqrt(np.max(np.sum(d2.lam**v * delta, axis=(-2, -1))))))
    return GalerkinTable(cuts, s_values, diffs, times)


@dataclass(frozen=True)
class DependenceReport:
    growth_factor: float  # sup_t ||z(t)|| / ||z(0)||
    growth_per_delta: float  # sup_t ||z(t)|| / delta
    delta: float
    C_fit: float
    C_apriori: float
    gronwall_ok: bool
    bound_ok: bool
    T: float
    times: np.ndarray
    w2: np.ndarray
    dw2_dt: np.ndarray
    weighted: np.ndarray  # int (1 + h^2) |w|^2


def continuous_dependence_check(
    params: SolverParams,
    ic: SpectralField,
    delta: float | None = None,
    T: float = 10.0,
    rng: np.random.Generator | None = None,
    direction: SpectralField | None = None,
    sample_every: int = 1,
) -> DependenceReport:
    """Evolve ``ic`` and ``ic + delta * direction`` and test the weighted Gronwall bound.

    With ``w = e^{gamma t} (psi_1 - psi_2)`` and ``h = |psi_1| + |psi_2|`` the
    check is ``|d/dt ||w||^2| <= C int (1 + h^2) |w|^2`` at every sample
    with one constant ``C`` fitted over the run.  ``C`` must not exceed
    ``2 kappa4``, the constant implied by the Jacobian growth bound.
    """
    if delta is None:
        delta = 1e-8 * sobolev_norm(ic, 1.0)
    if not delta > 0:
        raise ValueError("delta must be positive")
    domain = ic.domain
    if direction is None:
        rng = np.random.default_rng() if rng is None else rng
        direction = random_field(domain, rng, 1.0)
    c0 = np.stack([ic.coeffs, ic.coeffs + delta * direction.coeffs])
    times, coeffs = evolve_coeffs(c0, 0.0, T, params, sample_every)
    z = coeffs[:, 0] - coeffs[:, 1]
    w = np.exp(params.gamma * times)[:, None, None] * z
    w2 = np.sum(np.abs(w) ** 2, axis=(-2, -1))
    z2 = np.sum(np.abs(z) ** 2, axis=(-2, -1))
    growth = float(np.sqrt(np.max(z2) / z2[0])) if z2[0] > 0 else 1.0

    psi1 = domain.synthesize(coeffs[:, 0], padded=True)
    psi2 = domain.synthesize(coeffs[:, 1], padded=True)
    wg = domain.synthesize(w, padded=True)
    h = np.abs(psi1) + np.abs(psi2)
    weighted = domain.padded_weight * np.sum((1 + h**2) * np.abs(wg) ** 2, axis=(-2, -1))
    dw2 = np.gradient(w2, times, edge_order=2) if len(times) >= 3 else np.zeros_like(w2)
    # z = psi_1 - psi_2 carries an absolute round-off of a few ulps of ||psi||, so
    # |d||w||^2/dt| below this floor is noise and cannot be attributed to any C
    scale = np.sqrt(np.sum(np.abs(coeffs[:, 0]) ** 2, axis=(-2, -1))) * np.exp(params.gamma * times)
    w_noise = 4.0 * np.finfo(float).eps * float(np.max(scale))
    floor = 0.0
    if len(times) > 1:
        floor = 2.0 * (float(np.sqrt(np.max(w2))) + w_noise) * w_noise / float(np.min(np.abs(np.diff(times))))
    signal = np.where(np.abs(dw2) > floor, np.abs(dw2), 0.0)
    ratio = np.divide(signal, weighted, out=np.zeros_like(dw2), where=weighted > 0)
    C_fit = float(np.max(ratio))
    pot = params.potential
    C_apriori = 2.0 * max(12.0 * pot.a2, 2.0 * abs(pot.a1))
    holds = bool(np.all(np.abs(dw2) <= C_fit * weighted * (1 + 1e-12) + floor))
    return DependenceReport(
        growth_factor=growth,
        growth_per_delta=float(np.sqrt(np.max(z2))) / delta,
        delta=float(delta),
        C_fit=C_fit,
        C_apriori=C_apriori,
        gronwall_ok=holds and C_fit <= C_apriori,
        bound_ok=growth <= math.exp(C_fit * T) * 1.05,
        T=T,
        times=times,
        w2=w2,
        dw2_dt=dw2,
        weighted=weighted,
    )
