"""Run configuration: a JSON document with fixed blocks.

Example::

    {
      "domain":  {"Lx": 3.14159, "Ly": 3.14159, "Nx": 64, "Ny": 64, "Mx": 21, "My": 21},
      "physics": {"gamma": 0.5, "a2": 1.0, "a1": 0.0, "a0": 0.0},
      "pump":    [{"profile": [[1, 1, 1.0, 0.0]], "omega": 1.0, "phase": 0.0}],
      "run":     {"t0": 0.0, "t1": 10.0, "dt": 0.01, "sample_every": 10, "seed": 7},
      "initial": {"kind": "random", "e_norm": 5.0},
      "study":   {"tau_list": [5, 10, 20, 40]}
    }

Only ``domain`` and ``physics`` are required.  Unknown keys, wrong types
and violated invariants raise :class:`ConfigError` whose message starts
with the dotted path of the offending key.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .integrator import SCHEMES, SolverParams
from .nonlinearity import QuarticPotential
from .pumping import PumpMode, QuasiPeriodicPump
from .spectral import DomainSpec, SpectralField, build_domain, random_field

INITIAL_KINDS = ("zero", "random", "modes", "smooth")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the culprit."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class DomainBlock:
    Lx: float
    Ly: float
    Nx: int
    Ny: int
    Mx: int
    My: int


@dataclass(frozen=True)
class PhysicsBlock:
    gamma: float
    a2: float
    a1: float = 0.0
    a0: float = 0.0


@dataclass(frozen=True)
class PumpModeBlock:
    profile: tuple[tuple[int, int, float, float], ...]
    omega: float = 0.0
    phase: float = 0.0


@dataclass(frozen=True)
class RunBlock:
    t0: float = 0.0
    t1: float = 10.0
    dt: float = 0.01
    sample_every: int = 10
    seed: int | None = None
    scheme: str = "strang_split"


@dataclass(frozen=True)
class InitialBlock:
    kind: str = "zero"
    e_norm: float = 1.0  # for "random"
    amplitude: float = 1.0  # for "smooth"
    modes: tuple[tuple[int, int, float, float], ...] = ()  # for "modes"


@dataclass(frozen=True)
class StudyBlock:
    m_list: tuple[int, ...] | None = None  # required by converge
    s: tuple[float, ...] = (0.5, 0.9)
    tau_list: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    horizons: tuple[float, ...] | None = None  # defaults to tau_list
    t_obs: float = 0.0
    delta: float | None = None
    R: float = 10.0
    ensemble_size: int = 20
    backward_T: float = 0.0
    backward_gamma: float | None = None


@dataclass(frozen=True)
class RunConfig:
    domain: DomainBlock
    physics: PhysicsBlock
    pump: tuple[PumpModeBlock, ...] = ()
    run: RunBlock = field(default_factory=RunBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    study: StudyBlock = field(default_factory=StudyBlock)

    # -- derived objects -------------------------------------------------
    def build_domain(self) -> DomainSpec:
        d = self.domain
        return build_domain(d.Lx, d.Ly, d.Nx, d.Ny, d.Mx, d.My)

    def build_potential(self) -> QuarticPotential:
        p = self.physics
        return QuarticPotential(p.a2, p.a1, p.a0)

    def build_pump(self, domain: DomainSpec | None = None) -> QuasiPeriodicPump:
        domain = self.build_domain() if domain is None else domain
        modes = []
        for m in self.pump:
            prof = {}
            for j, k, re, im in m.profile:
                prof[(j, k)] = prof.get((j, k), 0.0) + complex(re, im)
            modes.append(PumpMode(SpectralField.from_modes(domain, prof), m.omega, m.phase))
        return QuasiPeriodicPump(domain, tuple(modes))

    def solver_params(self, domain: DomainSpec | None = None) -> SolverParams:
        return SolverParams(
            self.physics.gamma, self.build_potential(), self.build_pump(domain), self.run.dt, self.run.scheme
        )

    def rng(self) -> np.random.Generator:
        """PCG64 generator seeded from ``run.seed``."""
        if self.run.seed is None:
            raise ConfigError("run.seed", "seed required for a randomized study")
        return np.random.default_rng(self.run.seed)

    def initial_state(self, domain: DomainSpec | None = None, rng: np.random.Generator | None = None) -> SpectralField:
        domain = self.build_domain() if domain is None else domain
        ini = self.initial
        if ini.kind == "zero":
            return SpectralField.zeros(domain)
        if ini.kind == "modes":
            prof = {}
            for j, k, re, im in ini.modes:
                prof[(j, k)] = prof.get((j, k), 0.0) + complex(re, im)
            return SpectralField.from_modes(domain, prof)
        if ini.kind == "smooth":
            return smooth_field(domain, ini.amplitude)
        return random_field(domain, self.rng() if rng is None else rng, ini.e_norm)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pump"] = [asdict(m) for m in self.pump]
        return _listify(out)


def smooth_field(domain: DomainSpec, amplitude: float) -> SpectralField:
    """Exponentially decaying spectrum ``A e^{-(j+k-2)/2} e^{i(0.7 j - 0.3 k)}``."""
    j = np.arange(1, domain.Mx + 1)[:, None]
    k = np.arange(1, domain.My + 1)[None, :]
    c = amplitude * np.exp(-0.5 * (j + k - 2)) * np.exp(1j * (0.7 * j - 0.3 * k))
    return SpectralField(domain, c)


def _listify(obj):
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_listify(v) for v in obj]
    return obj


# -- parsing ---------------------------------------------------------------

def _real(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _int(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"expected an integer, got {type(v).__name__}")
    return v


def _list(key, v):
    if not isinstance(v, list):
        raise ConfigError(key, f"expected a list, got {type(v).__name__}")
    return v


def _block(key, raw, allowed, required=()):
    if not isinstance(raw, dict):
        raise ConfigError(key, f"expected an object, got {type(raw).__name__}")
    for k in raw:
        if k not in allowed:
            raise ConfigError(f"{key}.{k}", "unknown key")
    for k in required:
        if k not in raw:
            raise ConfigError(f"{key}.{k}", "missing required field")
    return raw


def _entries(key, raw):
    out = []
    for n, e in enumerate(_list(key, raw)):
        ek = f"{key}[{n}]"
        if not isinstance(e, list) or len(e) != 4:
            raise ConfigError(ek, "expected [j, k, re, im]")
        out.append((_int(ek + ".j", e[0]), _int(ek + ".k", e[1]), _real(ek + ".re", e[2]), _real(ek + ".im", e[3])))
    return tuple(out)


def _check_modes(key, entries, d: DomainBlock):
    for n, (j, k, _, _) in enumerate(entries):
        if not (1 <= j <= d.Mx and 1 <= k <= d.My):
            raise ConfigError(f"{key}[{n}]", f"mode ({j}, {k}) outside the cut {d.Mx}x{d.My}")


def _parse_domain(raw) -> DomainBlock:
    names = ("Lx", "Ly", "Nx", "Ny", "Mx", "My")
    _block("domain", raw, names, names)
    d = DomainBlock(
        _real("domain.Lx", raw["Lx"]), _real("domain.Ly", raw["Ly"]),
        *(_int(f"domain.{k}", raw[k]) for k in ("Nx", "Ny", "Mx", "My")),
    )
    for k in ("Lx", "Ly"):
        if not getattr(d, k) > 0:
            raise ConfigError(f"domain.{k}", "must be positive")
    for k in ("Nx", "Ny", "Mx", "My"):
        if getattr(d, k) < 1:
            raise ConfigError(f"domain.{k}", "must be >= 1")
    if d.Mx >= d.Nx:
        raise ConfigError("domain.Mx", "mode cut requires Mx<Nx")
    if d.My >= d.Ny:
        raise ConfigError("domain.My", "mode cut requires My<Ny")
    return d


def _parse_physics(raw) -> PhysicsBlock:
    _block("physics", raw, ("gamma", "a2", "a1", "a0"), ("gamma", "a2"))
    p = PhysicsBlock(**{k: _real(f"physics.{k}", v) for k, v in raw.items()})
    if p.a2 <= 0:
        raise ConfigError("physics.a2", "defocusing requires a2>0")
    if p.gamma < 0:
        raise ConfigError("physics.gamma", "must be nonnegative")
    return p


def _parse_pump(raw, d: DomainBlock) -> tuple[PumpModeBlock, ...]:
    modes = []
    for n, m in enumerate(_list("pump", raw)):
        key = f"pump[{n}]"
        _block(key, m, ("profile", "omega", "phase"), ("profile",))
        prof = _entries(key + ".profile", m["profile"])
        _check_modes(key + ".profile", prof, d)
        modes.append(PumpModeBlock(
            prof, _real(key + ".omega", m.get("omega", 0.0)), _real(key + ".phase", m.get("phase", 0.0))
        ))
    return tuple(modes)


def _parse_run(raw) -> RunBlock:
    _block("run", raw, ("t0", "t1", "dt", "sample_every", "seed", "scheme"))
    kw = {}
    for k in ("t0", "t1", "dt"):
        if k in raw:
            kw[k] = _real(f"run.{k}", raw[k])
    if "sample_every" in raw:
        kw["sample_every"] = _int("run.sample_every", raw["sample_every"])
    if raw.get("seed") is not None:
        seed = _int("run.seed", raw["seed"])
        if not 0 <= seed < 2**64:
            raise ConfigError("run.seed", "must be an unsigned 64-bit integer")
        kw["seed"] = seed
    if "scheme" in raw:
        if raw["scheme"] not in SCHEMES:
            raise ConfigError("run.scheme", f"unknown scheme {raw['scheme']!r}")
        kw["scheme"] = raw["scheme"]
    r = RunBlock(**kw)
    if not r.dt > 0:
        raise ConfigError("run.dt", "dt must be positive")
    if r.t1 == r.t0:
        raise ConfigError("run.t1", "t1 must differ from t0")
    if r.sample_every < 1:
        raise ConfigError("run.sample_every", "must be >= 1")
    return r


def _parse_initial(raw, d: DomainBlock) -> InitialBlock:
    _block("initial", raw, ("kind", "e_norm", "amplitude", "modes"))
    kw = {}
    kind = raw.get("kind", "zero")
    if kind not in INITIAL_KINDS:
        raise ConfigError("initial.kind", f"expected one of {', '.join(INITIAL_KINDS)}")
    kw["kind"] = kind
    for k in ("e_norm", "amplitude"):
        if k in raw:
            kw[k] = _real(f"initial.{k}", raw[k])
    if kw.get("e_norm", 1.0) < 0:
        raise ConfigError("initial.e_norm", "must be nonnegative")
    if "modes" in raw:
        kw["modes"] = _entries("initial.modes", raw["modes"])
        _check_modes("initial.modes", kw["modes"], d)
    return InitialBlock(**kw)


def _parse_study(raw, d: DomainBlock) -> StudyBlock:
    names = ("m_list", "s", "tau_list", "horizons", "t_obs", "delta", "R", "ensemble_size", "backward_T", "backward_gamma")
    _block("study", raw, names)
    kw = {}
    if raw.get("m_list") is not None:
        ms = tuple(_int(f"study.m_list[{n}]", v) for n, v in enumerate(_list("study.m_list", raw["m_list"])))
        if any(b <= a for a, b in zip(ms, ms[1:])) or len(ms) < 2:
            raise ConfigError("study.m_list", "needs at least two increasing cuts")
        if ms[0] < 1 or ms[-1] > min(d.Mx, d.My):
            raise ConfigError("study.m_list", f"cuts must lie in [1, {min(d.Mx, d.My)}]")
        kw["m_list"] = ms
    if "s" in raw:
        sv = raw["s"]
        sv = tuple(_real(f"study.s[{n}]", v) for n, v in enumerate(_list("study.s", sv))) if isinstance(sv, list) \
            else (_real("study.s", sv),)
        if any(v >= 1 for v in sv):
            raise ConfigError("study.s", "requires s<1")
        kw["s"] = sv
    for k in ("tau_list", "horizons"):
        if raw.get(k) is not None:
            vals = tuple(_real(f"study.{k}[{n}]", v) for n, v in enumerate(_list(f"study.{k}", raw[k])))
            if not vals or any(b <= a for a, b in zip(vals, vals[1:])) or vals[0] < 0:
                raise ConfigError(f"study.{k}", "must be nonempty, nonnegative and increasing")
            kw[k] = vals
    for k in ("t_obs", "R", "backward_T"):
        if k in raw:
            kw[k] = _real(f"study.{k}", raw[k])
    for k in ("delta", "backward_gamma"):
        if raw.get(k) is not None:
            kw[k] = _real(f"study.{k}", raw[k])
    if "ensemble_size" in raw:
        kw["ensemble_size"] = _int("study.ensemble_size", raw["ensemble_size"])
    st = StudyBlock(**kw)
    if st.delta is not None and not st.delta > 0:
        raise ConfigError("study.delta", "delta must be positive")
    if not st.R > 0:
        raise ConfigError("study.R", "must be positive")
    if st.ensemble_size < 1:
        raise ConfigError("study.ensemble_size", "must be >= 1")
    if st.backward_T < 0:
        raise ConfigError("study.backward_T", "must be nonnegative")
    if st.backward_gamma is not None and not st.backward_gamma > 0:
        raise ConfigError("study.backward_gamma", "must be positive")
    return st


def config_from_dict(raw: dict) -> RunConfig:
    _block("config", raw, ("domain", "physics", "pump", "run", "initial", "study"), ("domain", "physics"))
    d = _parse_domain(raw["domain"])
    return RunConfig(
        domain=d,
        physics=_parse_physics(raw["physics"]),
        pump=_parse_pump(raw.get("pump", []), d),
        run=_parse_run(raw.get("run", {})),
        initial=_parse_initial(raw.get("initial", {}), d),
        study=_parse_study(raw.get("study", {}), d),
    )


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON configuration document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(raw)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
