"""Experiment configuration: a flat dataclass, named presets and a
``key = value`` text format in which unknown keys are rejected."""
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError

STUDIES = ("single", "space", "time", "energy", "pattern", "compare")
SCHEMES = ("ieq1", "ieq2", "secant", "gn1", "gn2")
STARTUPS = ("copy", "first_order")
INITIAL = ("solution", "sin_quarter", "strip", "random", "zero", "constant")


@dataclass
class ExperimentConfig:
    preset: str = "custom"
    study: str = "single"
    scheme: str = "ieq2"
    schemes: tuple = ("ieq2", "secant", "gn1", "gn2")

    # discretization
    degree: int = 2
    space: str = "P"
    nx: Optional[int] = None
    ny: Optional[int] = None
    domain: Optional[tuple] = None          # (x0, x1, y0, y1)
    quad_order: Optional[int] = None
    meshes: tuple = (8, 16, 32, 64)

    # boundary conditions
    bc: Optional[str] = None
    beta0: Optional[float] = None
    beta1: Optional[float] = None
    penalty_length: str = "cell"
    bc_data: str = "none"                   # "exact" takes g_i from the manufactured solution

    # model
    a: float = 2.0
    eps: Optional[float] = None
    g: float = 0.0
    B: float = 1.0

    # data
    solution: str = "none"                  # "mms": u = exp(-lam t) sin(kx) sin(ky)
    mms_k: float = 0.5
    initial: str = "solution"
    constant: float = 0.0
    seed: int = 0

    # time stepping
    dt: Optional[float] = None
    dts: tuple = ()
    dt_ref: Optional[float] = None
    t_end: Optional[float] = None
    startup: str = "copy"                   # two-step start: u^{-1} = u^0, or one ieq1 step

    # solvers
    solver: str = "auto"
    tol: float = 1e-12
    eta: float = 1e-12
    max_iters: int = 100

    # output and checks
    output_dir: str = "runs/out"
    snapshot_every: int = 0
    error_order: int = 10
    error_endpoints: bool = True
    identity_tol: float = 1e-8
    check_identity: bool = True
    check_energy: bool = False
    steady_tol: float = 1e-3

    def domain_bounds(self):
        x0, x1, y0, y1 = self.domain
        return (x0, x1), (y0, y1)

    @property
    def steps(self):
        return steps_for(self.t_end, self.dt)

    def validate(self):
        missing = [n for n in ("nx", "ny", "domain", "bc", "eps", "dt", "t_end")
                   if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"missing required settings {missing} (preset {self.preset!r})")
        if self.study not in STUDIES:
            raise ConfigError(f"study must be one of {STUDIES}, got {self.study!r}")
        for s in (self.scheme, *self.schemes):
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        if self.initial not in INITIAL:
            raise ConfigError(f"initial must be one of {INITIAL}, got {self.initial!r}")
        if self.initial == "solution" and self.solution == "none":
            raise ConfigError("initial = solution needs solution = mms")
        if self.startup not in STARTUPS:
            raise ConfigError(f"startup must be one of {STARTUPS}, got {self.startup!r}")
        if self.solution not in ("none", "mms"):
            raise ConfigError(f"solution must be 'none' or 'mms', got {self.solution!r}")
        if self.bc_data not in ("none", "exact"):
            raise ConfigError(f"bc_data must be 'none' or 'exact', got {self.bc_data!r}")
        if self.bc_data == "exact" and self.solution == "none":
            raise ConfigError("bc_data = exact needs solution = mms")
        if len(self.domain) != 4 or not (self.domain[0] < self.domain[1] and self.domain[2] < self.domain[3]):
            raise ConfigError(f"domain must be x0,x1,y0,y1 with x0<x1, y0<y1; got {self.domain}")
        if min(self.nx, self.ny) < 1 or self.degree < 0:
            raise ConfigError("mesh counts must be positive and degree non-negative")
        if not (self.dt > 0 and self.t_end > 0):
            raise ConfigError("dt and t_end must be positive")
        steps_for(self.t_end, self.dt)
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.B <= 0:
            raise ConfigError(f"B must be positive, got {self.B}")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        return self


def steps_for(t_end, dt):
    n = t_end / dt
    steps = int(round(n))
    if steps < 1 or abs(n - steps) > 1e-9 * max(1.0, n):
        raise ConfigError(f"t_end={t_end} is not an integer multiple of dt={dt}")
    return steps


_PI = math.pi
_MMS = dict(solution="mms", initial="solution", t_end=0.1, study="space", scheme="ieq2",
            eps=0.025, g=0.0)
_STRIP = dict(domain=(0.0, 40.0, 0.0, 40.0), bc="iii", eps=2.0, g=0.0, degree=2,
              initial="strip", solution="none", t_end=10.0)

PRESETS = {
    "custom": {},
    "ex41_case1": dict(_MMS, domain=(-2 * _PI, 2 * _PI, -2 * _PI, 2 * _PI), bc="periodic",
                       degree=1, dt=1e-3, mms_k=0.5),
    "ex41_case2": dict(_MMS, domain=(0.0, 2 * _PI, 0.0, 2 * _PI), bc="ii", beta0=0.0,
                       degree=2, dt=1e-4, mms_k=0.5),
    "ex41_case3": dict(_MMS, domain=(-_PI, _PI, -_PI, _PI), bc="iii", g=0.05,
                       degree=2, dt=1e-4, mms_k=0.5),
    "ex42": dict(_MMS, domain=(0.0, 2 * _PI, 0.0, 2 * _PI), bc="i", beta1=1.0,
                 bc_data="exact", degree=2, dt=1e-4, mms_k=0.5),
    "ex43": dict(domain=(-2 * _PI, 2 * _PI, -2 * _PI, 2 * _PI), bc="iii", eps=0.025, g=0.0,
                 degree=2, initial="sin_quarter", study="time", scheme="ieq2", nx=64, ny=64,
                 t_end=2.0, dt=2.0 ** -3, dt_ref=2.0 ** -8,
                 dts=(2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6)),
    "ex44": dict(_STRIP, study="energy", scheme="ieq2", nx=64, ny=64, dt=1e-3,
                 dts=(1e-3, 1e-2, 1e-1, 1.0), check_energy=True),
    "ex45_rolls": dict(domain=(0.0, 100.0, 0.0, 100.0), bc="periodic", eps=0.3, g=0.0,
                       degree=2, initial="random", study="pattern", scheme="ieq2",
                       nx=128, ny=128, dt=0.01, t_end=198.0, snapshot_every=1000,
                       check_energy=True),
    "ex45_hex": dict(domain=(0.0, 100.0, 0.0, 100.0), bc="periodic", eps=0.1, g=1.0,
                     degree=2, initial="random", study="pattern", scheme="ieq2",
                     nx=128, ny=128, dt=0.01, t_end=198.0, snapshot_every=1000,
                     check_energy=True),
    "ex46_case1": dict(_MMS, domain=(-2 * _PI, 2 * _PI, -2 * _PI, 2 * _PI), bc="iii",
                       g=0.05, degree=2, mms_k=0.25, nx=32, ny=32, t_end=2.0, study="time",
                       dt=2.0 ** -2, dts=(2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5),
                       eta=1e-12, startup="first_order"),
    "ex46_case2": dict(_STRIP, study="compare", nx=64, ny=64, B=1e4, eta=1e-10, dt=2.0 ** -2,
                       dts=tuple(2.0 ** -m for m in range(2, 8)), check_energy=False),
}


def _field_types():
    return {f.name: f for f in fields(ExperimentConfig)}


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float(text):
    t = text.strip()
    if "^" in t:
        base, exp = t.split("^", 1)
        return float(base) ** float(exp)
    return float(t)


def _parse_optional(text, conv):
    return None if text.strip().lower() in ("none", "") else conv(text)


_TUPLE_CONV = {"schemes": str.strip, "meshes": int, "dts": _parse_float, "domain": _parse_float}


def _convert(name, text):
    """Convert the text of one setting to the field's type."""
    text = text.strip()
    if name in _TUPLE_CONV:
        conv = _TUPLE_CONV[name]
        items = [s for s in text.replace(";", ",").split(",") if s.strip()]
        if name == "domain" and len(items) == 2:
            items = items * 2
        return tuple(conv(s) for s in items)
    default = ExperimentConfig.__dataclass_fields__[name].default
    if isinstance(default, bool):
        return _parse_bool(text)
    if name in ("nx", "ny", "quad_order", "degree", "seed", "snapshot_every",
                "max_iters", "error_order"):
        return _parse_optional(text, lambda s: int(s, 0))
    if name in ("beta0", "beta1", "eps", "dt", "dt_ref", "t_end") or isinstance(default, float):
        return _parse_optional(text, _parse_float)
    return text


def parse_assignments(lines, source="<config>"):
    """``key = value`` lines (``#`` comments, blank lines allowed) -> dict of typed values."""
    known = _field_types()
    out = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{num}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "mesh":
            key = "nx"
            out["ny"] = _convert("ny", value)
        if key not in known:
            raise ConfigError(f"{source}:{num}: unknown key {key!r}")
        try:
            out[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{num}: bad value for {key!r}: {exc}") from None
    return out


def build_config(settings: dict) -> ExperimentConfig:
    """Preset defaults, then explicit settings on top; validated."""
    preset = settings.get("preset", "custom")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    merged = dict(PRESETS[preset])
    merged.update(settings)
    merged["preset"] = preset
    if merged.get("study") == "space" and merged.get("nx") is None and merged.get("meshes"):
        merged["nx"] = merged["meshes"][0]
    cfg = ExperimentConfig(**merged)
    if cfg.nx is not None and cfg.ny is None:
        cfg = replace(cfg, ny=cfg.nx)
    return cfg.validate()


def load_config(path, overrides=()):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    settings = parse_assignments(text.splitlines(), str(path))
    settings.update(parse_assignments(overrides, "--override"))
    return build_config(settings)


def preset_config(name, **overrides):
    """Config for a named preset with keyword overrides (used by scripts and tests)."""
    return build_config(dict(overrides, preset=name))


def dump_config(cfg: ExperimentConfig) -> str:
    """Round-trippable ``key = value`` text."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
