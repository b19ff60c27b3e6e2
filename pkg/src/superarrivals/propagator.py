"""Crank-Nicolson time stepping of the 1D Schroedinger equation in a hard-wall box."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DivergenceError, InvalidParameterError, NumericalError
from .grid import SpatialGrid, UnitSystem, WaveState
from .potentials import BarrierSchedule, sample_on_grid

DEFAULT_STEPS = 8192
DEFAULT_HORIZON = 40.0  # in t0

Observer = Callable[[float, WaveState], None]


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    t_end: float
    store_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidParameterError("dt must be positive")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise InvalidParameterError("t_end must be positive")
        if int(self.store_every) != self.store_every or self.store_every < 1:
            raise InvalidParameterError("store_every must be a positive integer")

    @classmethod
    def default(cls, units: UnitSystem, store_every: int = 1) -> "PropagatorConfig":
        t_end = DEFAULT_HORIZON * units.t0
        return cls(dt=t_end / DEFAULT_STEPS, t_end=t_end, store_every=store_every)

    def check_phase_bound(self, schedule: BarrierSchedule | None, units: UnitSystem):
        """Reject steps whose potential phase ``dt max|V| / hbar`` reaches 0.5."""
        if schedule is None:
            return
        vmax = abs(schedule.V0) * (2 if schedule.kind == "double_height_ramp" else 1)
        if self.dt * vmax / units.hbar >= 0.5:
            raise InvalidParameterError(
                f"dt * max|V| / hbar = {self.dt * vmax / units.hbar:.3g} >= 0.5; reduce dt")


def time_grid(config: PropagatorConfig, breakpoints: Iterable[float] = ()) -> np.ndarray:
    """Step boundaries from 0 to ``t_end``.

    Each breakpoint inside the run lands exactly on a step boundary; the
    step inside every stretch between breakpoints is the nominal ``dt``
    rescaled to fit a whole number of steps.
    """
    marks = sorted({0.0, config.t_end, *(b for b in breakpoints if 0.0 < b < config.t_end)})
    pieces = []
    for a, b in zip(marks[:-1], marks[1:]):
        n = max(1, int(round((b - a) / config.dt)))
        pieces.append(a + (b - a) * np.arange(n) / n)
    pieces.append(np.array([config.t_end]))
    return np.concatenate(pieces)


class _Stepper:
    """Holds the factored CN matrix and refactors only when V or dt change."""

    def __init__(self, schedule: BarrierSchedule | None, grid: SpatialGrid, units: UnitSystem):
        self.schedule = schedule
        self.grid = grid
        self.units = units
        self.alpha = units.hbar**2 / (2.0 * units.mass * grid.dx**2)
        self.work = np.empty(grid.n_points - 2, np.complex128)
        self._key = None

    def _prepare(self, t_mid: float, dt: float):
        segments = self.schedule.segments(t_mid) if self.schedule is not None else ()
        key = (segments, dt)
        if key == self._key:
            return
        c = 1j * dt / (2.0 * self.units.hbar)
        if segments:
            v = sample_on_grid(self.schedule, self.grid, t_mid)[1:-1]
        else:
            v = np.zeros(self.grid.n_points - 2)
        self.diag = 1.0 + c * (2.0 * self.alpha + v)
        self.off = -c * self.alpha
        self.cp, self.inv, ok = _kernels.factor(self.diag, self.off)
        if not ok:
            raise NumericalError("degenerate tridiagonal system")
        self._key = key

    def advance(self, psi: np.ndarray, t: float, dt: float):
        self._prepare(t + 0.5 * dt, dt)
        _kernels.cn_advance(psi, self.diag, self.off, self.cp, self.inv, self.work)


def _working_copy(state: WaveState, grid: SpatialGrid) -> np.ndarray:
    psi = np.array(state.amplitudes, dtype=np.complex128)
    if psi.shape[0] != grid.n_points:
        raise InvalidParameterError("state does not match the grid")
    psi[0] = psi[-1] = 0.0
    return psi


def step(state: WaveState, schedule: BarrierSchedule | None, grid: SpatialGrid,
         units: UnitSystem, dt: float) -> WaveState:
    """Advance ``state`` by one Crank-Nicolson step of length ``dt``.

    The Hamiltonian uses the three-point Laplacian and V sampled at the
    midpoint time ``t + dt/2``.
    """
    psi = _working_copy(state, grid)
    _Stepper(schedule, grid, units).advance(psi, state.time, dt)
    if not np.isfinite(psi).all():
        raise DivergenceError(f"non-finite amplitudes after step at t = {state.time!r}")
    return WaveState(psi, state.time + dt)


@dataclass
class RunRecord:
    """Outcome of :func:`propagate`."""

    final: WaveState
    times: np.ndarray
    observers: Sequence[Observer] = field(default_factory=list)


def _frozen_view(psi: np.ndarray, t: float) -> WaveState:
    view = psi.view()
    view.flags.writeable = False
    return WaveState(view, t)


def propagate(initial: WaveState, schedule: BarrierSchedule | None, grid: SpatialGrid,
              units: UnitSystem, config: PropagatorConfig,
              observers: Sequence[Observer] = (),
              breakpoints: Iterable[float] | None = None) -> RunRecord:
    """Run from ``initial.time`` (taken as 0) to ``config.t_end``.

    Every observer is called with ``(t, state)`` at t = 0 and after every
    ``store_every``-th step. The state handed to observers is a read-only
    view that is overwritten by the next step; copy it to keep it.

    ``breakpoints`` overrides the instants aligned to step boundaries
    (default: the schedule's own), which lets two runs share a time axis.
    """
    config.check_phase_bound(schedule, units)
    if breakpoints is None:
        breakpoints = schedule.breakpoints() if schedule is not None else ()
    ticks = time_grid(config, breakpoints)
    psi = _working_copy(initial, grid)
    stepper = _Stepper(schedule, grid, units)

    stored = [0]
    for obs in observers:
        obs(0.0, _frozen_view(psi, 0.0))
    n_steps = len(ticks) - 1
    for k in range(n_steps):
        t = ticks[k]
        stepper.advance(psi, t, ticks[k + 1] - t)
        done = k + 1
        if done % 64 == 0 or done == n_steps:
            if not math.isfinite(np.vdot(psi, psi).real):
                raise DivergenceError(f"non-finite amplitudes at t = {ticks[done]!r}")
        if done % config.store_every == 0 or done == n_steps:
            stored.append(done)
            state = _frozen_view(psi, ticks[done])
            for obs in observers:
                obs(ticks[done], state)
    return RunRecord(WaveState(psi, ticks[-1]), ticks[stored], list(observers))
