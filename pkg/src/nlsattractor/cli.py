"""Command-line entry point.

    nlsattractor <subcommand> --config <path> [--out <dir>] [--seed <u64>]

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 numerical blow-up.  Every subcommand writes at least one CSV and a
``summary.json`` into the output directory.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import (
    AbsorbingBall,
    absorbing_entry_time,
    attraction_profile,
    continuous_dependence_check,
    galerkin_convergence_study,
    pullback_distances,
    pullback_ensemble,
    seed_set,
)
from .config import ConfigError, RunConfig, parse_config
from .diagnostics import (
    backward_fit,
    balance_residual,
    decay_envelope,
    energy_samples,
    envelope_check,
    hamiltonian,
    phi_ode_residual,
)
from .integrator import BlowUpError, evolve, evolve_ensemble
from .io import write_summary, write_table, write_timeseries
from .nonlinearity import condition_constants
from .pumping import pump_sup_norm
from .spectral import sobolev_norm

SUBCOMMANDS = ("simulate", "audit", "absorb", "converge", "attract", "depend")
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
RNG_NAME = "numpy.random.PCG64 via default_rng(seed)"

AUDIT_BAND = (3.2, 4.8)
GALERKIN_RATIO = 0.1
ATTRACTION_RATIO = 0.2


class _Checks:
    def __init__(self):
        self.items: dict[str, dict] = {}

    def add(self, name: str, passed: bool, value=None, threshold=None):
        if name in self.items:
            raise KeyError(f"check {name!r} reported twice")
        self.items[name] = {"pass": bool(passed), "value": value, "threshold": threshold}

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.items.values())


def constants_summary(cfg: RunConfig) -> dict:
    pot = cfg.build_potential()
    pump = cfg.build_pump()
    c = condition_constants(pot)
    out = dataclasses.asdict(c)
    out["p0"] = pump_sup_norm(pump)
    if cfg.physics.gamma > 0:
        env = decay_envelope(c, cfg.physics.gamma, pump)
        out.update(alpha_plus=env.alpha_plus, alpha_minus_apriori=env.alpha_minus, D=env.D, D0=env.D0,
                   C1=env.C1, C_minus=env.C_minus, ball_radius=AbsorbingBall.from_envelope(env).radius)
    return out


def _median_ratio(coarse: np.ndarray, fine: np.ndarray) -> float:
    num, den = np.abs(coarse), np.abs(fine)
    keep = den > 0
    return float(np.median(num[keep] / den[keep])) if keep.any() else float("nan")


def _common(t_a, t_b):
    """Indices into ``t_b`` of samples at the times ``t_a`` (to round-off)."""
    idx = np.searchsorted(t_b, t_a - 1e-9 * max(1.0, abs(t_a[-1])))
    idx = np.clip(idx, 0, len(t_b) - 1)
    if not np.allclose(t_b[idx], t_a, rtol=0, atol=1e-9 * max(1.0, abs(t_a[-1]))):
        raise ValueError("refined run does not sample the coarse times")
    return idx


def _ball(cfg: RunConfig, gamma: float | None = None) -> AbsorbingBall:
    g = cfg.physics.gamma if gamma is None else gamma
    if not g > 0:
        raise ConfigError("physics.gamma", "the absorbing ball needs gamma>0")
    env = decay_envelope(condition_constants(cfg.build_potential()), g, cfg.build_pump())
    return AbsorbingBall.from_envelope(env)


# -- subcommands -------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: Path, checks: _Checks) -> dict:
    params = cfg.solver_params()
    ic = cfg.initial_state()
    traj = evolve(ic, cfg.run.t0, cfg.run.t1, params, cfg.run.sample_every)
    samples = energy_samples(traj)
    write_timeseries(samples, out / "timeseries.csv")
    h = np.array([s.h for s in samples])
    parts = np.array([s.kinetic + s.u for s in samples])
    err = float(np.max(np.abs(h - parts) / np.maximum(1.0, np.abs(h))))
    checks.add("hamiltonian_split", err <= 1e-12, err, 1e-12)
    if not params.pump.modes:
        l2 = np.array([s.l2 for s in samples])
        tau = np.abs(traj.times - traj.times[0])
        sign = 1.0 if cfg.run.t1 > cfg.run.t0 else -1.0
        expected = np.exp(-sign * params.gamma * tau) * l2[0]
        dev = float(np.max(np.abs(l2 - expected)) / l2[0]) if l2[0] > 0 else float(np.max(l2))
        checks.add("charge_decay", dev <= 1e-10, dev, 1e-10)
    return {"samples": len(samples), "final_e_norm": float(samples[-1].e_norm), "final_h": float(samples[-1].h)}


def cmd_audit(cfg: RunConfig, out: Path, checks: _Checks) -> dict:
    params = cfg.solver_params()
    ic = cfg.initial_state()
    k = cfg.run.sample_every
    # same sample_every in steps, so the sample spacing halves with dt
    coarse = evolve(ic, cfg.run.t0, cfg.run.t1, params, k)
    fine = evolve(ic, cfg.run.t0, cfg.run.t1, params.replace(dt=params.dt / 2), k)
    write_timeseries(energy_samples(coarse), out / "timeseries_dt.csv")
    write_timeseries(energy_samples(fine), out / "timeseries_dt2.csv")
    idx = _common(coarse.times, fine.times)
    ratios = {}
    for name, fn in (("balance", balance_residual), ("phi", phi_ode_residual)):
        rc, ric = fn(coarse)
        rf, rif = fn(fine)
        ratios[f"{name}_differential"] = _median_ratio(rc, rf[idx])
        ratios[f"{name}_integral"] = _median_ratio(ric, rif[idx])
    for name, r in ratios.items():
        checks.add(f"ratio_{name}", AUDIT_BAND[0] <= r <= AUDIT_BAND[1], r, list(AUDIT_BAND))
    return {"residual_ratios": ratios, "dt": params.dt}


def _backward(cfg: RunConfig, out: Path, checks: _Checks, start_ic) -> dict:
    gamma_b = cfg.study.backward_gamma or cfg.physics.gamma
    params = cfg.solver_params().replace(gamma=gamma_b)
    env = decay_envelope(condition_constants(params.potential), gamma_b, params.pump)
    ball = AbsorbingBall.from_envelope(env)
    settle = evolve(start_ic, cfg.run.t0, cfg.run.t1, params, 1 << 30)
    start = settle.final
    checks.add("backward_start_in_ball", sobolev_norm(start, 1.0) <= ball.radius,
               sobolev_norm(start, 1.0), ball.radius)
    T = cfg.study.backward_T
    bw = evolve(start, 0.0, -T, params, cfg.run.sample_every)
    write_timeseries(energy_samples(bw), out / "backward.csv")
    rep = backward_fit(bw, env)
    checks.add("backward_finite", rep.finite, rep.h_max, None)
    checks.add("backward_envelope_fit",
               rep.violations_fit == 0 and np.isfinite(rep.alpha_minus_fit), rep.alpha_minus_fit, None)
    checks.add("backward_envelope_apriori", rep.violations_apriori == 0, rep.violations_apriori, 0)
    return {"gamma": gamma_b, "T": T, **dataclasses.asdict(rep),
            "alpha_minus_apriori": env.alpha_minus, "C_minus": env.C_minus}


def cmd_absorb(cfg: RunConfig, out: Path, checks: _Checks) -> dict:
    params = cfg.solver_params()
    rng = cfg.rng()
    consts = condition_constants(params.potential)
    ball = _ball(cfg)
    ics = seed_set(params.domain, rng, cfg.study.R, cfg.study.ensemble_size)
    ens = evolve_ensemble(ics, cfg.run.t0, cfg.run.t1, params, cfg.run.sample_every)
    entries, violations, e_violations, d_emp = [], 0, 0, 0.0
    width = len(str(len(ics) - 1))
    for b in range(len(ics)):
        traj = ens.member(b)
        h0 = hamiltonian(traj.state(0), params.potential)
        env = decay_envelope(consts, params.gamma, params.pump, H0=h0)
        rep = envelope_check(traj, env)
        violations += rep.violations
        e_violations += rep.e_violations
        d_emp = max(d_emp, rep.D_empirical)
        entries.append(absorbing_entry_time(traj, ball))
        write_timeseries(energy_samples(traj), out / f"member_{b:0{width}d}.csv")
    checks.add("envelope_violations", violations == 0, violations, 0)
    checks.add("energy_norm_envelope_violations", e_violations == 0, e_violations, 0)
    finite = sum(e is not None for e in entries)
    checks.add("entry_times_finite", finite == len(ics), finite, len(ics))
    result = {
        "entry_times": entries,
        "initial_e_norms": [sobolev_norm(f, 1.0) for f in ics],
        "D_empirical": d_emp,
    }
    if cfg.study.backward_T > 0:
        result["backward"] = _backward(cfg, out, checks, ics[0])
    return result


def cmd_converge(cfg: RunConfig, out: Path, checks: _Checks) -> dict:
    if cfg.run.t1 <= cfg.run.t0:
        raise ConfigError("run.t1", "converge needs t1>t0")
    if cfg.study.m_list is None:
        raise ConfigError("study.m_list", "converge needs a list of mode cuts")
    params = cfg.solver_params()
    ic = cfg.initial_state()
    T = cfg.run.t1 - cfg.run.t0
    table = galerkin_convergence_study(params, ic, cfg.study.m_list, T, s=list(cfg.study.s),
                                       sample_every=cfg.run.sample_every)
    rows = []
    for s, diffs in table.diffs.items():
        for (a, b), v in zip(zip(table.cuts, table.cuts[1:]), diffs):
            rows.append((a[0], b[0], s, v))
        dec = all(y < x for x, y in zip(diffs, diffs[1:]))
        checks.add(f"strictly_decreasing_s{s:g}", dec, diffs, None)
        ratio = min(diffs) / max(diffs) if max(diffs) > 0 else 0.0
        checks.add(f"smallest_over_largest_s{s:g}", ratio <= GALERKIN_RATIO, ratio, GALERKIN_RATIO)
    write_table(out / "converge.csv", ("m_lo", "m_hi", "s", "sup_diff"), rows)
    return {"cuts": [list(c) for c in table.cuts], "diffs": {f"{s:g}": d for s, d in table.diffs.items()}}


def cmd_attract(cfg: RunConfig, out: Path, checks: _Checks) -> dict:
    params = cfg.solver_params()
    rng = cfg.rng()
    ball = _ball(cfg)
    st = cfg.study
    seeds = seed_set(params.domain, rng, ball.radius, st.ensemble_size)
    fresh = seed_set(params.domain, rng, st.R, st.ensemble_size)
    snaps = pullback_ensemble(params, seeds, st.tau_list, st.t_obs)
    dists = pullback_distances(snaps)
    horizons = st.horizons if st.horizons is not None else st.tau_list
    prof = attraction_profile(params, fresh, snaps[-1], horizons)
    write_table(out / "attract.csv", ("tau", "diameter", "dist_to_previous"),
                [(s.pump_origin, s.diameter, d) for s, d in zip(snaps, [float("nan")] + dists)])
    write_table(out / "attraction.csv", ("horizon", "distance"), list(zip(horizons, prof)))
    mono = all(b <= a for a, b in zip(dists, dists[1:]))
    checks.add("pullback_nonincreasing", mono, dists, None)
    ratio = prof[-1] / prof[0] if prof[0] > 0 else 0.0
    checks.add("attraction_ratio", ratio <= ATTRACTION_RATIO, ratio, ATTRACTION_RATIO)
    return {"ball_radius": ball.radius, "pullback_distances": dists,
            "diameters": [s.diameter for s in snaps], "attraction": prof}


def cmd_depend(cfg: RunConfig, out: Path, checks: _Checks) -> dict:
    if cfg.run.t1 <= cfg.run.t0:
        raise ConfigError("run.t1", "depend needs t1>t0")
    params = cfg.solver_params()
    rng = cfg.rng()
    ic = cfg.initial_state(rng=rng)
    T = cfg.run.t1 - cfg.run.t0
    rep = continuous_dependence_check(params, ic, delta=cfg.study.delta, T=T, rng=rng,
                                      sample_every=cfg.run.sample_every)
    write_table(out / "depend.csv", ("t", "w2", "dw2_dt", "weighted"),
                zip(rep.times, rep.w2, rep.dw2_dt, rep.weighted))
    checks.add("gronwall", rep.gronwall_ok, rep.C_fit, rep.C_apriori)
    checks.add("growth_bound", rep.bound_ok, rep.growth_factor, float(np.exp(rep.C_fit * T) * 1.05))
    return {"growth_factor": rep.growth_factor, "growth_per_delta": rep.growth_per_delta,
            "C_fit": rep.C_fit, "C_apriori": rep.C_apriori, "delta": rep.delta,
            "ic_e_norm": sobolev_norm(ic, 1.0)}


COMMANDS = {
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "absorb": cmd_absorb,
    "converge": cmd_converge,
    "attract": cmd_attract,
    "depend": cmd_depend,
}


def run(subcommand: str, cfg: RunConfig, out=".") -> int:
    """Run one subcommand, write its files into ``out`` and return the exit code."""
    if subcommand not in COMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    checks = _Checks()
    start = time.perf_counter()
    summary = {
        "version": __version__,
        "subcommand": subcommand,
        "config": cfg.to_dict(),
        "rng": f"{RNG_NAME}, numpy {np.__version__}",
        "constants": constants_summary(cfg),
    }
    try:
        summary["results"] = COMMANDS[subcommand](cfg, out, checks)
        code = EXIT_PASS if checks.ok else EXIT_FAIL
        summary["status"] = "pass" if checks.ok else "fail"
    except BlowUpError as exc:
        row = None if exc.step is None else exc.step // cfg.run.sample_every + 1
        summary["status"] = "blowup"
        summary["blowup"] = {"message": str(exc), "step": exc.step, "t": exc.t, "row": row}
        print(f"nlsattractor: blow-up: {exc} (CSV row {row})", file=sys.stderr)
        code = EXIT_BLOWUP
    summary["checks"] = checks.items
    summary["wall_clock"] = time.perf_counter() - start
    write_summary(summary, out / "summary.json")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlsattractor", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--seed", type=int, default=None, help="overrides run.seed (unsigned 64-bit)")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"nlsattractor: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed", "must be an unsigned 64-bit integer")
            cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, seed=args.seed))
        return run(args.subcommand, cfg, args.out)
    except ConfigError as exc:
        print(f"nlsattractor: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
