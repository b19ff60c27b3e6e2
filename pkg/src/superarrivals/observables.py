"""Physical series extracted from wave states.

Transmission probability, expectation values restricted to the transmitted
sector, and the pilot-wave fields (amplitude, phase gradient, quantum
potential) used by the trajectory integrator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from .errors import UndefinedSectorError
from .grid import SpatialGrid, UnitSystem, WaveState, norm, partial_norm
from .potentials import BarrierSchedule, sample_on_grid

logger = logging.getLogger(__name__)

T_FLOOR = 1e-6
R_FLOOR = 1e-8

LABELS = ("static", "perturbed", "free_analytic", "free")


@dataclass
class TransmissionSeries:
    """Sampled T(t) at the detector plane ``x_d``.

    ``t_p`` records when the perturbation of the generating run started
    (None for unperturbed runs).
    """

    times: np.ndarray
    values: np.ndarray
    x_d: float
    label: str
    t_p: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def rescaled(self, time_unit: float, length_unit: float) -> "TransmissionSeries":
        """Same series with times and ``x_d`` expressed in the given units."""
        return TransmissionSeries(
            self.times / time_unit, self.values.copy(), self.x_d / length_unit, self.label,
            None if self.t_p is None else self.t_p / time_unit)


def transmission(state: WaveState, grid: SpatialGrid, x_d: float) -> float:
    """Probability beyond the detector plane, ``int_{x_d}^{x_max} |psi|^2 dx``."""
    return partial_norm(state, grid, x_d)


def free_transmission(t, x_d: float, x0: float, sigma0: float, p0: float,
                      units: UnitSystem):
    """Closed-form T(t) of a freely spreading Gaussian.

    Uses the rms width ``sigma0 * sqrt(1 + (hbar t / 2 m sigma0^2)^2)``.
    """
    t = np.asarray(t, dtype=float)
    sigma_t = sigma0 * np.sqrt(1.0 + (units.hbar * t / (2.0 * units.mass * sigma0**2)) ** 2)
    return 0.5 * (1.0 + erf((p0 * t / units.mass + x0 - x_d) / (math.sqrt(2.0) * sigma_t)))


def _derivatives(psi: np.ndarray, dx: float) -> tuple[np.ndarray, np.ndarray]:
    d1 = np.zeros_like(psi)
    d2 = np.zeros_like(psi)
    d1[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * dx)
    d2[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / dx**2
    return d1, d2


def _sector_integral(f: np.ndarray, grid: SpatialGrid, x_d: float, offset: int = 0) -> complex:
    """Trapezoid of ``f`` on [x_d, x_max] with the same first-cell rule as partial_norm.

    ``f`` holds node values from index ``offset`` to the end of the grid.
    """
    j, frac = grid.locate(x_d)
    j -= offset
    tail = f[j + 1:]
    rest = tail.sum() - 0.5 * (tail[0] + tail[-1])
    return ((1.0 - frac) * 0.5 * (f[j] + f[j + 1]) + rest) * grid.dx


class SectorExpectations(NamedTuple):
    energy: float
    momentum: float
    position: float


def _local_densities(psi, x, v, dx, units):
    d1, d2 = _derivatives(psi, dx)
    conj = np.conj(psi)
    h_density = conj * (-units.hbar**2 / (2.0 * units.mass) * d2 + v * psi)
    p_density = conj * (-1j * units.hbar) * d1
    x_density = x * (psi.real**2 + psi.imag**2)
    return h_density, p_density, x_density


def _potential(schedule, grid, t):
    if schedule is None:
        return np.zeros(grid.n_points)
    return sample_on_grid(schedule, grid, t)


def transmitted_expectations(state: WaveState, grid: SpatialGrid, units: UnitSystem,
                             schedule: BarrierSchedule | None, x_d: float,
                             t_floor: float = T_FLOOR) -> SectorExpectations:
    """<H>, <p>, <x> of the part of the packet beyond ``x_d``, normalised by T(t).

    Derivatives are finite differences on the full grid; only real parts are
    kept. The imaginary residue left by truncating the domain at ``x_d`` is
    logged at debug level.
    """
    T = transmission(state, grid, x_d)
    if not T > t_floor:
        raise UndefinedSectorError(f"T = {T:.3g} is below the floor {t_floor:g}")
    # one node of margin so every node at or beyond x_d has both neighbours
    start = max(grid.locate(x_d)[0] - 1, 0)
    h, p, x = _local_densities(state.amplitudes[start:], grid.x[start:],
                               _potential(schedule, grid, state.time)[start:], grid.dx, units)
    energy = _sector_integral(h, grid, x_d, start)
    momentum = _sector_integral(p, grid, x_d, start)
    position = _sector_integral(x, grid, x_d, start)
    logger.debug("sector imaginary residue: H %.3g, p %.3g",
                 energy.imag / T, momentum.imag / T)
    return SectorExpectations(energy.real / T, momentum.real / T, position.real / T)


def expectation_values(state: WaveState, grid: SpatialGrid, units: UnitSystem,
                       schedule: BarrierSchedule | None = None) -> SectorExpectations:
    """Full-grid <H>, <p>, <x> (the state is assumed normalised)."""
    h, p, x = _local_densities(state.amplitudes, grid.x, _potential(schedule, grid, state.time),
                               grid.dx, units)
    n = norm(state, grid)

    def trap(f):
        return (f.sum() - 0.5 * (f[0] + f[-1])) * grid.dx

    return SectorExpectations(trap(h).real / n, trap(p).real / n, trap(x).real / n)


@dataclass
class PilotFields:
    amplitude: np.ndarray
    phase_gradient: np.ndarray
    quantum_potential: np.ndarray
    mask: np.ndarray


def pilot_fields(state: WaveState, grid: SpatialGrid, units: UnitSystem,
                 r_floor: float = R_FLOOR) -> PilotFields:
    """Polar decomposition fields of ``psi = R exp(iS/hbar)``.

    ``phase_gradient = hbar Im(psi'/psi)`` avoids unwrapping S; the quantum
    potential is ``-hbar^2/(2m) R''/R``. Both are NaN where R is below
    ``r_floor * max(R)`` or at the walls.
    """
    psi = state.amplitudes
    R = np.abs(psi)
    mask = R >= r_floor * R.max()
    mask[0] = mask[-1] = False
    d1, _ = _derivatives(psi, grid.dx)
    _, r2 = _derivatives(R.astype(complex), grid.dx)
    grad = np.full(psi.shape, np.nan)
    Q = np.full(psi.shape, np.nan)
    rho = R[mask] ** 2
    grad[mask] = units.hbar * (np.conj(psi[mask]) * d1[mask]).imag / rho
    Q[mask] = -units.hbar**2 / (2.0 * units.mass) * r2[mask].real / R[mask]
    return PilotFields(R, grad, Q, mask)


def probability_current(state: WaveState, grid: SpatialGrid, units: UnitSystem) -> np.ndarray:
    """``j = (hbar/m) Im(psi* psi')`` at the nodes (central differences)."""
    d1, _ = _derivatives(state.amplitudes, grid.dx)
    return units.hbar / units.mass * (np.conj(state.amplitudes) * d1).imag


# -- observers -------------------------------------------------------------

@dataclass
class TransmissionObserver:
    """Accumulates T(t) at one or more detector planes."""

    grid: SpatialGrid
    x_d: tuple[float, ...]
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def __post_init__(self):
        self.x_d = tuple(np.atleast_1d(np.asarray(self.x_d, dtype=float)))

    def __call__(self, t, state):
        self.times.append(t)
        self.values.append([transmission(state, self.grid, xd) for xd in self.x_d])

    def series(self, label: str, t_p: float | None = None, index: int = 0) -> TransmissionSeries:
        vals = np.asarray(self.values)[:, index]
        return TransmissionSeries(np.asarray(self.times), vals, self.x_d[index], label, t_p)


@dataclass
class ExpectationSeries:
    times: np.ndarray
    energy_T: np.ndarray
    momentum_T: np.ndarray
    position_T: np.ndarray


@dataclass
class ExpectationObserver:
    """Transmitted-sector expectations every ``stride``-th call; NaN below the floor."""

    grid: SpatialGrid
    units: UnitSystem
    schedule: BarrierSchedule | None
    x_d: float
    stride: int = 16
    rows: list = field(default_factory=list)
    _calls: int = 0

    def __call__(self, t, state):
        self._calls += 1
        if (self._calls - 1) % self.stride:
            return
        try:
            e = transmitted_expectations(state, self.grid, self.units, self.schedule, self.x_d)
        except UndefinedSectorError:
            e = SectorExpectations(math.nan, math.nan, math.nan)
        self.rows.append((t, *e))

    def series(self) -> ExpectationSeries:
        a = np.asarray(self.rows, dtype=float).reshape(-1, 4)
        return ExpectationSeries(a[:, 0], a[:, 1], a[:, 2], a[:, 3])


@dataclass
class NormObserver:
    grid: SpatialGrid
    values: list = field(default_factory=list)

    def __call__(self, t, state):
        self.values.append(norm(state, self.grid))

    @property
    def max_drift(self) -> float:
        v = np.asarray(self.values)
        return float(np.max(np.abs(v - v[0])))
