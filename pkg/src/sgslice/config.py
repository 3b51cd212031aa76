"""Run configuration: YAML schema, defaults, validation and round-trip dumping."""

from dataclasses import asdict, dataclass, field, fields, is_dataclass
import math

import yaml

from .errors import ConfigError
from .params import PhysicalParams, derive_scales, derive_thermo, validate_config

MODES = ("simulate", "benchmark", "convergence-dt", "convergence-n", "solve-ot")


@dataclass
class ScalesSection:
    L0: float = 1.0e7
    H1: float = 1.0e5
    H2: float = 1.0e6


@dataclass
class InitSection:
    Bu: float = 0.5
    a: float = -7.5
    M1: int = 72
    M2: int = 36
    surface_exner: float = 1.0
    masses: str = "uniform"
    refine: int = 4


@dataclass
class NumericsSection:
    """dt is in seconds for physical runs and in model time units for the benchmark.

    ``n_segments`` only feeds the secant wall approximation utility; cell
    integrals always use the exact walls.
    """

    dt: float = 3600.0
    days: float = 1.0
    newton_tol: float = 1e-10
    max_iter: int = 100
    quad_order: int = 16
    n_segments: int = 64
    copies: int = 1
    snapshot_every: int = 0


@dataclass
class BenchmarkSection:
    seeds: list = field(default_factory=lambda: [[0.0, 2.0]])
    masses: list = None
    dt: float = 0.1
    steps: int = 100


@dataclass
class ConvergenceSection:
    dts: list = field(default_factory=lambda: [14400.0, 7200.0, 3600.0, 1800.0])
    dt_ref: float = 900.0
    n: int = 576
    sizes: list = field(default_factory=lambda: [64, 144, 256, 400])
    n_ref: int = 576
    dt: float = 3600.0
    epsilon: float = None
    normalizer: float = None


@dataclass
class RunConfig:
    mode: str = "simulate"
    thermo: str = "physical"
    params: PhysicalParams = field(default_factory=PhysicalParams)
    scales: ScalesSection = field(default_factory=ScalesSection)
    init: InitSection = field(default_factory=InitSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    benchmark: BenchmarkSection = field(default_factory=BenchmarkSection)
    convergence: ConvergenceSection = field(default_factory=ConvergenceSection)
    output: str = "out"

    def to_dict(self):
        return asdict(self)


_SECTIONS = {
    "params": PhysicalParams,
    "scales": ScalesSection,
    "init": InitSection,
    "numerics": NumericsSection,
    "benchmark": BenchmarkSection,
    "convergence": ConvergenceSection,
}


def _coerce(cls, name, data, problems):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        problems.append(f"{name}: expected a mapping")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in data.items():
        if key not in known:
            problems.append(f"{name}.{key}: unknown key")
            continue
        default = known[key].default
        if isinstance(default, float) and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                problems.append(f"{name}.{key}: expected a number, got {val!r}")
                continue
            if isinstance(default, int) and not isinstance(default, bool) and not isinstance(val, int):
                problems.append(f"{name}.{key}: expected an integer, got {val!r}")
                continue
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        problems.append(f"{name}: {exc}")
        return cls()


def config_from_dict(data):
    """Build and validate a RunConfig; every violation is reported at once."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    problems = []
    top = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in top:
            problems.append(f"{key}: unknown key")
    kwargs = {name: _coerce(cls, name, data.get(name), problems) for name, cls in _SECTIONS.items()}
    for key in ("mode", "thermo", "output"):
        if key in data:
            kwargs[key] = data[key]
    cfg = RunConfig(**kwargs)
    problems.extend(validate_run_config(cfg))
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return cfg


def validate_run_config(cfg):
    problems = []
    if cfg.mode not in MODES:
        problems.append(f"mode: must be one of {', '.join(MODES)}")
    if cfg.thermo not in ("physical", "benchmark"):
        problems.append("thermo: must be 'physical' or 'benchmark'")
    problems.extend(validate_config(cfg.params))
    s = cfg.scales
    for name in ("L0", "H1", "H2"):
        if not getattr(s, name) > 0:
            problems.append(f"scales.{name} must be positive")
    if not problems:
        sc = derive_scales(cfg.params, s.L0, s.H1, s.H2)
        problems.extend(validate_config(cfg.params, sc, derive_thermo(cfg.params, cfg.thermo)))
    n = cfg.numerics
    for name in ("dt", "days", "newton_tol"):
        if not (getattr(n, name) > 0 and math.isfinite(getattr(n, name))):
            problems.append(f"numerics.{name} must be positive")
    for name, lo in (("max_iter", 1), ("quad_order", 2), ("n_segments", 1), ("copies", 1), ("snapshot_every", 0)):
        if getattr(n, name) < lo:
            problems.append(f"numerics.{name} must be >= {lo}")
    b = cfg.benchmark
    try:
        seeds = [[float(v) for v in z] for z in b.seeds]
        if any(len(z) != 2 or not z[1] > 0 for z in seeds):
            raise ValueError
        if b.masses is not None and (len(b.masses) != len(seeds) or any(not float(m) > 0 for m in b.masses)):
            problems.append("benchmark.masses: one positive mass per seed required")
    except (TypeError, ValueError):
        problems.append("benchmark.seeds: expected a list of [z1, z2] pairs with z2 > 0")
    if not b.dt > 0 or b.steps < 0:
        problems.append("benchmark: dt must be positive and steps non-negative")
    c = cfg.convergence
    if not c.dts or any(not float(d) > 0 for d in c.dts) or not c.dt_ref > 0 or not c.dt > 0:
        problems.append("convergence: time steps must be positive")
    if not c.sizes or any(int(m) < 4 for m in list(c.sizes) + [c.n, c.n_ref]):
        problems.append("convergence: ensemble sizes must be at least 4")
    return problems


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: {exc.problem}") from exc
    return config_from_dict(data)


def dump_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(_plain(cfg), fh, sort_keys=False)


def _plain(obj):
    if is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj
