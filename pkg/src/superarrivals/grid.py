"""Units, the uniform spatial grid and the wavefunction container."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import DomainError, InvalidParameterError, ShapeError

DEFAULT_N_POINTS = 131072


@dataclass(frozen=True)
class UnitSystem:
    """Natural units with hbar = 1 and the packet scales of the scattering setup.

    ``t0`` is the time the packet centre needs to travel one ``sigma0`` and
    ``E0`` the mean energy of the initial Gaussian.
    """

    hbar: float = 1.0
    mass: float = 0.5
    sigma1: float = 0.05
    p0: float = 50.0 * math.pi

    def __post_init__(self):
        if self.hbar != 1.0:
            raise InvalidParameterError("hbar is fixed to 1")
        for name in ("mass", "sigma1", "p0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive, got {value!r}")

    @property
    def sigma0(self) -> float:
        return self.sigma1 / math.sqrt(2.0)

    @property
    def t0(self) -> float:
        return self.mass * self.sigma0 / self.p0

    @property
    def E0(self) -> float:
        return (self.p0**2 / (2.0 * self.mass)
                + self.hbar**2 / (8.0 * self.mass * self.sigma0**2))


def make_units(overrides: Mapping[str, float] | None = None) -> UnitSystem:
    """Build a :class:`UnitSystem`, applying overrides before deriving t0 and E0.

    Accepted keys are ``mass``, ``p0``, ``sigma1`` and ``sigma0`` (the latter
    sets ``sigma1 = sqrt(2) * sigma0``).
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"mass", "p0", "sigma0", "sigma1", "hbar"}
    if unknown:
        raise InvalidParameterError(f"unknown unit overrides: {sorted(unknown)}")
    if "sigma0" in overrides:
        sigma0 = float(overrides.pop("sigma0"))
        if not sigma0 > 0:
            raise InvalidParameterError(f"sigma0 must be positive, got {sigma0!r}")
        sigma1 = sigma0 * math.sqrt(2.0)
        if "sigma1" in overrides and not math.isclose(overrides["sigma1"], sigma1):
            raise InvalidParameterError("sigma0 and sigma1 overrides disagree")
        overrides["sigma1"] = sigma1
    return UnitSystem(**{k: float(v) for k, v in overrides.items()})


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise InvalidParameterError("grid requires x_min < x_max")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise InvalidParameterError("grid requires n_points >= 3")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n_points)
        x.flags.writeable = False
        return x

    def locate(self, position: float) -> tuple[int, float]:
        """Index ``j`` of the cell containing ``position`` and the fraction past node ``j``."""
        if not self.x_min <= position <= self.x_max:
            raise DomainError(f"x = {position!r} outside [{self.x_min}, {self.x_max}]")
        s = (position - self.x_min) / self.dx
        j = min(int(math.floor(s)), self.n_points - 2)
        return j, min(max(s - j, 0.0), 1.0)


def default_grid(units: UnitSystem, n_points: int = DEFAULT_N_POINTS) -> SpatialGrid:
    """The [-500 sigma0, 500 sigma0] hard-wall box."""
    half = 500.0 * units.sigma0
    return SpatialGrid(-half, half, n_points)


@dataclass(frozen=True)
class WaveState:
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.ndim != 1:
            raise ShapeError("amplitudes must be one-dimensional")
        object.__setattr__(self, "amplitudes", a)

    def density(self) -> np.ndarray:
        return self.amplitudes.real**2 + self.amplitudes.imag**2


def _check(state: WaveState, grid: SpatialGrid) -> np.ndarray:
    psi = state.amplitudes
    if psi.shape[0] != grid.n_points:
        raise ShapeError(f"state has {psi.shape[0]} points, grid has {grid.n_points}")
    return psi


def _tail_sum(psi: np.ndarray, j: int) -> float:
    """Trapezoid sum (without dx) of |psi|^2 over nodes j..end."""
    tail = psi[j:]
    total = np.vdot(tail, tail).real
    return total - 0.5 * (abs(tail[0]) ** 2 + abs(tail[-1]) ** 2)


def norm(state: WaveState, grid: SpatialGrid) -> float:
    """Composite trapezoid integral of |psi|^2 over the whole grid."""
    psi = _check(state, grid)
    return float(_tail_sum(psi, 0) * grid.dx)


def partial_norm(state: WaveState, grid: SpatialGrid, from_x: float) -> float:
    """Integral of |psi|^2 on [from_x, x_max].

    A ``from_x`` between nodes contributes the linear fraction of its cell's
    trapezoid, which keeps the result continuous in ``from_x``.
    """
    psi = _check(state, grid)
    j, frac = grid.locate(from_x)
    rho_j = abs(psi[j]) ** 2
    rho_k = abs(psi[j + 1]) ** 2
    cell = 0.5 * (rho_j + rho_k)
    rest = _tail_sum(psi, j + 1)
    return float(((1.0 - frac) * cell + rest) * grid.dx)


def interval_norm(state: WaveState, grid: SpatialGrid, a: float, b: float) -> float:
    """Integral of |psi|^2 on [a, b], consistent with :func:`partial_norm`."""
    return partial_norm(state, grid, a) - partial_norm(state, grid, b)
