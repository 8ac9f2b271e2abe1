"""
Run configuration as flat ``section.key = value`` text.

The file is a TOML subset: one level of dotted keys, scalars and lists of
numbers. Every key is optional and defaults to the baseline model::

    model.A = 1.0            model.alpha = 0.3       model.beta = 0.8
    model.n = 0.02           model.delta_k = 0.1     model.delta_h = 0.05
    model.B = 0.1            model.gamma = 0.0       model.theta = 0.0
    model.phi = "linear"     model.sigma = 1.0       # "power": v**sigma
    grid.k_min = 0.25        grid.k_max = 4.0        grid.nk = 8
    grid.h_min = 0.25        grid.h_max = 4.0        grid.nh = 8
    grid.spacing = "log"     # or "linear"
    solve.*                  # fields of SolveOptions
    simulate.start_k = 1.0   simulate.start_h = 1.0  simulate.horizon = 100
    sweep.parameter = "beta" sweep.values = []       sweep.solve = false
    run.seed = 0             run.sample_count = 10000  run.out = "out"
"""
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .fields import GridSpec
from .primitives import ModelParams, PhiSpec
from .solver import SolveOptions


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSection:
    A: float = 1.0
    alpha: float = 0.3
    beta: float = 0.8
    n: float = 0.02
    delta_k: float = 0.1
    delta_h: float = 0.05
    B: float = 0.1
    gamma: float = 0.0
    theta: float = 0.0
    phi: str = "linear"
    sigma: float = 1.0


@dataclass(frozen=True)
class GridSection:
    k_min: float = 0.25
    k_max: float = 4.0
    h_min: float = 0.25
    h_max: float = 4.0
    nk: int = 8
    nh: int = 8
    spacing: str = "log"


@dataclass(frozen=True)
class SolveSection:
    tol: float = 1e-6
    max_iterations: int = 500
    inner_search: str = "golden-section-nested"
    inner_points: int = 41
    golden_iterations: int = 24
    value_floor: float = -math.inf
    edge: str = "scale"


@dataclass(frozen=True)
class SimulateSection:
    start_k: float = 1.0
    start_h: float = 1.0
    horizon: int = 100


@dataclass(frozen=True)
class SweepSection:
    parameter: str = "beta"
    values: tuple = ()
    solve: bool = False


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    sample_count: int = 10_000
    out: str = "out"


SECTIONS = {
    "model": ModelSection,
    "grid": GridSection,
    "solve": SolveSection,
    "simulate": SimulateSection,
    "sweep": SweepSection,
    "run": RunSection,
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    grid: GridSection = field(default_factory=GridSection)
    solve: SolveSection = field(default_factory=SolveSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    run: RunSection = field(default_factory=RunSection)

    def params(self, **overrides):
        m = asdict(self.model)
        phi = PhiSpec(m.pop("phi"), m.pop("sigma"))
        m.update(overrides)
        return ModelParams(phi=phi, **m)

    def grid_spec(self):
        g = self.grid
        space = np.geomspace if g.spacing == "log" else np.linspace
        return GridSpec(space(g.k_min, g.k_max, g.nk), space(g.h_min, g.h_max, g.nh))

    def solve_options(self):
        return SolveOptions(**asdict(self.solve))

    def with_run(self, **changes):
        return replace(self, run=replace(self.run, **changes))


def _coerce(cls, key, value):
    kind = {f.name: f.type for f in fields(cls)}[key]
    if kind in (float, "float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number")
        return float(value)
    if kind in (int, "int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        return value
    if kind in (str, "str"):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    if kind in (bool, "bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        return value
    if kind in (tuple, "tuple"):
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{key} must be a list of numbers")
        return tuple(float(v) for v in value)
    raise ConfigError(f"unsupported field type for {key}")


def from_mapping(data):
    sections = {}
    for name, body in data.items():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section {name!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{name} must be a section of dotted keys")
        cls = SECTIONS[name]
        known = {f.name for f in fields(cls)}
        for key in body:
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}")
        sections[name] = cls(**{k: _coerce(cls, k, v) for k, v in body.items()})
    config = RunConfig(**sections)
    validate(config)
    return config


def validate(config):
    """Build every derived object once so bad values surface as ConfigError."""
    try:
        config.params()
        config.grid_spec()
        config.solve_options()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if config.grid.spacing not in ("log", "linear"):
        raise ConfigError("grid.spacing must be 'log' or 'linear'")
    if config.simulate.horizon < 1:
        raise ConfigError("simulate.horizon must be positive")
    if config.sweep.parameter not in {f.name for f in fields(ModelSection)} - {"phi"}:
        raise ConfigError(f"cannot sweep {config.sweep.parameter!r}")


def parse(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return from_mapping(data)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def _literal(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, tuple):
        return "[" + ", ".join(_literal(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {value!r}")


def serialize(config):
    """Every key, in a fixed order, one ``section.key = value`` per line."""
    lines = []
    for name in SECTIONS:
        section = getattr(config, name)
        for f in fields(section):
            lines.append(f"{name}.{f.name} = {_literal(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"
