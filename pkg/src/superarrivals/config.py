"""Run configuration: flat ``section.key = value`` files with paper-unit defaults.

Quantities are given in the units the results are reported in: lengths in
sigma1 (grid extent in sigma0), times in t0, energies in E0. The ``units``
section itself is in natural units (hbar = 1).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
import sys
import typing
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigSyntaxError, ConfigValidationError, SuperarrivalError
from .grid import DEFAULT_N_POINTS, SpatialGrid, UnitSystem, make_units
from .potentials import BarrierSchedule
from .propagator import DEFAULT_HORIZON, DEFAULT_STEPS, PropagatorConfig
from .wavepackets import PacketSpec

SCHEDULE_KINDS = ("free", "static_rect", "linear_width", "height_ramp", "double_height_ramp")
SWEEP_AXES = ("epsilon", "w_f", "x_d", "V0", "b", "d", "alpha", "width")


@dataclass(frozen=True)
class UnitsSection:
    mass: float = 0.5
    sigma1: float = 0.05
    p0: float = 50.0 * math.pi


@dataclass(frozen=True)
class GridSection:
    x_min: float = -500.0  # sigma0
    x_max: float = 500.0   # sigma0
    n_points: int = DEFAULT_N_POINTS


@dataclass(frozen=True)
class PacketSection:
    kind: str = "gaussian"
    x0: float = -6.0
    alpha: float = 0.0


@dataclass(frozen=True)
class ScheduleSection:
    kind: str = "linear_width"
    V0: float = 1.5
    w_i: float = 0.08
    w_f: float = 0.48
    width: float = 0.32
    left_edge: float = 0.0
    a: float = 1.0
    b: float = 0.0
    separation: float = 0.32
    t_p: float = 7.14
    epsilon: float = 0.27


@dataclass(frozen=True)
class PropagatorSection:
    dt: float = DEFAULT_HORIZON / DEFAULT_STEPS
    t_end: float = DEFAULT_HORIZON
    store_every: int = 1


@dataclass(frozen=True)
class AnalysisSection:
    x_d: float = 10.0
    delta_dev: float = 1e-3
    free_reference: str = "analytic"
    axis: str = ""
    values: tuple[float, ...] = ()
    n_trajectories: int = 512
    trajectory_stride: int = 1
    expectation_stride: int = 16


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    snapshots: bool = False
    snapshot_stride: int = 256
    threads: int = 1


@dataclass(frozen=True)
class RunConfig:
    units: UnitsSection = field(default_factory=UnitsSection)
    grid: GridSection = field(default_factory=GridSection)
    packet: PacketSection = field(default_factory=PacketSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    propagator: PropagatorSection = field(default_factory=PropagatorSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    # -- builders (natural units) --------------------------------------------

    def unit_system(self) -> UnitSystem:
        return make_units(dataclasses.asdict(self.units))

    def spatial_grid(self) -> SpatialGrid:
        s0 = self.unit_system().sigma0
        return SpatialGrid(self.grid.x_min * s0, self.grid.x_max * s0, self.grid.n_points)

    def packet_spec(self) -> PacketSpec:
        u = self.unit_system()
        return PacketSpec(kind=self.packet.kind, x0=self.packet.x0 * u.sigma1,
                          sigma0=u.sigma0, p0=u.p0, alpha=self.packet.alpha)

    def barrier(self) -> BarrierSchedule | None:
        s = self.schedule
        if s.kind == "free":
            return None
        u = self.unit_system()
        L, T, E = u.sigma1, u.t0, u.E0
        common = dict(V0=s.V0 * E, t_p=s.t_p * T, epsilon=s.epsilon * T)
        if s.kind == "static_rect":
            return BarrierSchedule("static_rect", left_edge=s.left_edge * L, width=s.width * L, **common)
        if s.kind == "linear_width":
            return BarrierSchedule("linear_width", w_i=s.w_i * L, w_f=s.w_f * L, **common)
        return BarrierSchedule(s.kind, width=s.width * L, a=s.a, b=s.b,
                               separation=s.separation * L, **common)

    def reference_barrier(self) -> BarrierSchedule | None:
        """Unperturbed counterpart: the initial static barrier, or None for free propagation."""
        b = self.barrier()
        if b is not None and b.kind == "linear_width":
            return BarrierSchedule("static_rect", b.V0, left_edge=0.0, width=b.w_i)
        return None

    def propagator_config(self) -> PropagatorConfig:
        t0 = self.unit_system().t0
        p = self.propagator
        return PropagatorConfig(dt=p.dt * t0, t_end=p.t_end * t0, store_every=p.store_every)

    def x_d(self) -> float:
        return self.analysis.x_d * self.unit_system().sigma1

    def validate(self) -> "RunConfig":
        """Build every domain object once; raises ConfigValidationError on the first failure."""
        if self.schedule.kind not in SCHEDULE_KINDS:
            raise ConfigValidationError("schedule.kind", f"must be one of {SCHEDULE_KINDS}")
        checks = [("units", self.unit_system), ("grid", self.spatial_grid),
                  ("packet", self.packet_spec), ("schedule", self.barrier),
                  ("propagator", self.propagator_config)]
        for section, build in checks:
            try:
                build()
            except SuperarrivalError as exc:
                raise ConfigValidationError(_guess_field(section, str(exc)), str(exc)) from exc
        a = self.analysis
        if not a.delta_dev > 0:
            raise ConfigValidationError("analysis.delta_dev", "must be positive")
        if a.free_reference not in ("analytic", "numeric"):
            raise ConfigValidationError("analysis.free_reference", "must be 'analytic' or 'numeric'")
        if a.axis and a.axis not in SWEEP_AXES:
            raise ConfigValidationError("analysis.axis", f"must be one of {SWEEP_AXES}")
        if any(not math.isfinite(v) for v in a.values):
            raise ConfigValidationError("analysis.values", "must be finite")
        for name in ("n_trajectories",):
            if getattr(a, name) < 0:
                raise ConfigValidationError(f"analysis.{name}", "must be non-negative")
        for name in ("trajectory_stride", "expectation_stride"):
            if getattr(a, name) < 1:
                raise ConfigValidationError(f"analysis.{name}", "must be at least 1")
        grid = self.spatial_grid()
        if not grid.x_min < self.x_d() < grid.x_max:
            raise ConfigValidationError("analysis.x_d", "detector outside the grid")
        if self.output.threads < 1:
            raise ConfigValidationError("output.threads", "must be at least 1")
        if self.output.snapshot_stride < 1:
            raise ConfigValidationError("output.snapshot_stride", "must be at least 1")
        return self

    def digest(self) -> str:
        """Hash of every section that affects results (output settings excluded)."""
        core = dataclasses.replace(self, output=OutputSection())
        return hashlib.sha256(serialize_config(core).encode()).hexdigest()[:16]


def _guess_field(section: str, message: str) -> str:
    for key in ("w_f", "w_i", "epsilon", "t_p", "V0", "separation", "width",
                "mass", "sigma1", "p0", "n_points", "x_min", "x_max", "alpha", "dt", "t_end",
                "store_every"):
        if re.search(rf"\b{key}\b", message):
            return f"{section}.{key}"
    if "a + b" in message or "0 <= a" in message:
        return f"{section}.a"
    return section


# -- text format ---------------------------------------------------------------

_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _section_types():
    hints = typing.get_type_hints(RunConfig)
    return {name: hints[name] for name in _SECTIONS}


def _coerce(name: str, hint, value):
    origin = typing.get_origin(hint)
    if origin is tuple:
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise ConfigValidationError(name, "expected a list of numbers")
        return tuple(_coerce(name, float, v) for v in value)
    if hint is bool:
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        if not isinstance(value, bool):
            raise ConfigValidationError(name, "expected true or false")
        return value
    if hint is int:
        if isinstance(value, str):
            try:
                value = int(value)
            except ValueError:
                raise ConfigValidationError(name, f"expected an integer, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigValidationError(name, f"expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ConfigValidationError(name, f"expected a number, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigValidationError(name, f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigValidationError(name, f"expected a string, got {value!r}")
    return value


def _syntax_error(exc) -> ConfigSyntaxError:
    m = re.search(r"line (\d+), column (\d+)", str(exc))
    line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
    return ConfigSyntaxError(f"syntax error: {exc}", line, col)


def config_from_mapping(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Apply a nested ``{section: {key: value}}`` mapping on top of ``base``."""
    base = base or RunConfig()
    types = _section_types()
    sections = {}
    for section, entries in data.items():
        if section not in types:
            raise ConfigValidationError(section, "unknown section")
        if not isinstance(entries, dict):
            raise ConfigValidationError(section, "expected dotted keys under this section")
        hints = typing.get_type_hints(types[section])
        for key, value in entries.items():
            if key not in hints:
                raise ConfigValidationError(f"{section}.{key}", "unknown key")
            sections.setdefault(section, {})[key] = _coerce(f"{section}.{key}", hints[key], value)
    updated = {name: dataclasses.replace(getattr(base, name), **kv) for name, kv in sections.items()}
    return dataclasses.replace(base, **updated)


def parse_config(text: str, overrides: typing.Iterable[str] = ()) -> RunConfig:
    """Parse and validate a configuration; ``overrides`` are ``section.key=value`` strings."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise _syntax_error(exc) from None
    config = config_from_mapping(data)
    extra: dict = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigSyntaxError(f"override {item!r} is not of the form section.key=value")
        extra.setdefault(section, {})[name] = value.strip()
    if extra:
        config = config_from_mapping(extra, config)
    return config.validate()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    return json.dumps(value, ensure_ascii=False)


def serialize_config(config: RunConfig) -> str:
    """Every key, one ``section.key = value`` line each; round-trips through parse_config."""
    lines = []
    for section in _SECTIONS:
        obj = getattr(config, section)
        for f in dataclasses.fields(obj):
            lines.append(f"{section}.{f.name} = {_format(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"
