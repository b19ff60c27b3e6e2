"""Bohmian trajectories guided by the propagated wavefunction.

Velocities come from ``v = (hbar/m) Im(psi'/psi)`` at grid nodes, linearly
interpolated in x and, between two stored snapshots, linearly in t. Paths
are advanced with classical RK4 using the snapshot interval as step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import DomainError, IntegrationDegenerateError, InvalidParameterError
from .grid import SpatialGrid, UnitSystem, WaveState, default_grid
from .observables import R_FLOOR, pilot_fields
from .potentials import BarrierSchedule, sample_on_grid
from .wavepackets import PacketSpec, build_packet

TRANSMITTED = "transmitted"
REFLECTED = "reflected"
UNDECIDED = "undecided"


def classify(final_position: float, x_d: float | None, band: float) -> str:
    """Transmitted beyond ``x_d``, reflected before it, undecided within ``band`` of it."""
    if x_d is None or abs(final_position - x_d) <= band:
        return UNDECIDED
    return TRANSMITTED if final_position > x_d else REFLECTED


@dataclass
class Trajectory:
    initial_position: float
    times: np.ndarray
    positions: np.ndarray
    classification: str = UNDECIDED


@dataclass
class CriticalPoint:
    x_c: float
    T_infinity: float


# -- velocity field ----------------------------------------------------------

def velocity_at(psi: np.ndarray, offset: int, grid: SpatialGrid, units: UnitSystem,
                xs: np.ndarray, r_min: float) -> np.ndarray:
    """Guidance velocity ``(hbar/m) Im(psi* psi')/|psi|^2`` at positions ``xs``.

    ``psi`` and its central-difference derivative are interpolated linearly
    between the bracketing nodes before forming the ratio; interpolating the
    velocity itself is too coarse near interference minima and lets
    neighbouring paths swap order. ``psi`` holds grid nodes ``offset ..
    offset + len(psi) - 1``. Positions whose bracketing nodes have amplitude
    below ``r_min`` get NaN.
    """
    s = (xs - grid.x_min) / grid.dx - offset
    j = np.clip(np.floor(s).astype(np.int64), 1, psi.shape[0] - 3)
    f = s - j
    a = (1.0 - f) * psi[j] + f * psi[j + 1]
    d = ((1.0 - f) * (psi[j + 1] - psi[j - 1]) + f * (psi[j + 2] - psi[j])) / (2.0 * grid.dx)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = units.hbar / units.mass * (np.conj(a) * d).imag / (a.real**2 + a.imag**2)
    weak = (np.abs(psi[j]) < r_min) | (np.abs(psi[j + 1]) < r_min)
    v[weak] = np.nan
    return v


class _Snapshot:
    __slots__ = ("t", "psi", "offset", "r_min")

    def __init__(self, t, psi, offset, r_floor):
        self.t = t
        self.psi = psi
        self.offset = offset
        self.r_min = r_floor * np.abs(psi).max()


def _rk4_segment(xs, a: _Snapshot, b: _Snapshot, grid, units, lo, hi):
    """Advance positions from snapshot ``a`` to ``b`` with bilinear velocities."""
    h = b.t - a.t

    def va(x):
        return velocity_at(a.psi, a.offset, grid, units, x, a.r_min)

    def vb(x):
        return velocity_at(b.psi, b.offset, grid, units, x, b.r_min)

    def clamp(x):
        return np.clip(x, lo, hi)

    k1 = va(xs)
    x2 = clamp(xs + 0.5 * h * k1)
    k2 = 0.5 * (va(x2) + vb(x2))
    x3 = clamp(xs + 0.5 * h * k2)
    k3 = 0.5 * (va(x3) + vb(x3))
    x4 = clamp(xs + h * k3)
    k4 = vb(x4)
    return clamp(xs + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


# -- stored runs ---------------------------------------------------------------

@dataclass
class SnapshotRecorder:
    """Observer keeping copies of psi (optionally only inside ``window``) every ``stride`` calls."""

    grid: SpatialGrid
    stride: int = 1
    window: tuple[float, float] | None = None
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    _calls: int = 0

    def __post_init__(self):
        if self.window is None:
            self.lo, self.hi = 0, self.grid.n_points
        else:
            self.lo = max(int(math.floor((self.window[0] - self.grid.x_min) / self.grid.dx)), 0)
            self.hi = min(int(math.ceil((self.window[1] - self.grid.x_min) / self.grid.dx)) + 1,
                          self.grid.n_points)

    def __call__(self, t, state):
        self._calls += 1
        if (self._calls - 1) % self.stride:
            return
        self.times.append(t)
        self.states.append(np.array(state.amplitudes[self.lo:self.hi]))

    def snapshot(self, k, r_floor=R_FLOOR) -> _Snapshot:
        return _Snapshot(self.times[k], self.states[k], self.lo, r_floor)

    def full_state(self, k) -> WaveState:
        psi = np.zeros(self.grid.n_points, np.complex128)
        psi[self.lo:self.hi] = self.states[k]
        return WaveState(psi, self.times[k])

    @property
    def x_range(self) -> tuple[float, float]:
        x = self.grid.x
        return x[self.lo + 1], x[self.hi - 3]


def integrate_trajectory(x0_particle: float, snapshots: SnapshotRecorder, grid: SpatialGrid,
                         units: UnitSystem, x_d: float | None = None,
                         band: float | None = None) -> Trajectory:
    """Integrate one path through a stored run.

    Raises
    ------
    IntegrationDegenerateError
        When the path meets a near-node region; the partial trajectory is
        attached to the exception.
    """
    lo, hi = snapshots.x_range
    if not lo <= x0_particle <= hi:
        raise DomainError("initial position outside the stored window")
    band = units.sigma1 if band is None else band
    xs = np.array([float(x0_particle)])
    positions = [xs[0]]
    prev = snapshots.snapshot(0)
    if np.isnan(velocity_at(prev.psi, prev.offset, grid, units, xs, prev.r_min)[0]):
        raise IntegrationDegenerateError("initial position in a masked region",
                                         Trajectory(x0_particle, np.array(snapshots.times[:1]),
                                                    np.array(positions)))
    for k in range(1, len(snapshots.times)):
        cur = snapshots.snapshot(k)
        xs = _rk4_segment(xs, prev, cur, grid, units, lo, hi)
        if np.isnan(xs[0]):
            partial = Trajectory(x0_particle, np.array(snapshots.times[:k]), np.array(positions))
            raise IntegrationDegenerateError(
                f"trajectory from x = {x0_particle!r} hit a node near t = {cur.t!r}", partial)
        positions.append(xs[0])
        prev = cur
    positions = np.array(positions)
    return Trajectory(x0_particle, np.array(snapshots.times), positions,
                      classify(positions[-1], x_d, band))


# -- on-the-fly ensembles ------------------------------------------------------------

@dataclass
class TrajectoryBundle:
    initial_positions: np.ndarray
    times: np.ndarray
    positions: np.ndarray          # shape (n_times, n_particles)
    classifications: list
    degenerate: np.ndarray         # True where integration stopped at a node

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(float(self.initial_positions[i]), self.times, self.positions[:, i],
                          self.classifications[i])

    def fraction_beyond(self, x_d: float, k: int = -1) -> float:
        return float(np.mean(self.positions[k] > x_d))

    def crossing_violation(self) -> float:
        """Largest overtaking distance between neighbours ordered by start position (<= 0 if none)."""
        order = np.argsort(self.initial_positions)
        p = self.positions[:, order]
        return float(np.max(p[:, :-1] - p[:, 1:]))

    def arrival_times(self, x_d: float) -> np.ndarray:
        """First time each path reaches ``x_d`` (linear interpolation), NaN if never."""
        out = np.full(self.positions.shape[1], np.nan)
        beyond = self.positions >= x_d
        hit = beyond.any(axis=0)
        first = np.argmax(beyond, axis=0)
        for i in np.nonzero(hit)[0]:
            k = first[i]
            if k == 0:
                out[i] = self.times[0]
                continue
            xa, xb = self.positions[k - 1, i], self.positions[k, i]
            ta, tb = self.times[k - 1], self.times[k]
            out[i] = ta + (tb - ta) * (x_d - xa) / (xb - xa)
        return out


class TrajectoryEnsemble:
    """Observer integrating many paths during a propagation.

    Only the previous snapshot is kept, so memory does not grow with the
    run length apart from the recorded positions.
    """

    def __init__(self, initial_positions, grid: SpatialGrid, units: UnitSystem,
                 stride: int = 1, r_floor: float = R_FLOOR):
        self.grid = grid
        self.units = units
        self.stride = stride
        self.r_floor = r_floor
        self.x = np.array(initial_positions, dtype=float)
        self.initial = self.x.copy()
        self.degenerate = np.zeros(self.x.shape, bool)
        self.times = []
        self.positions = []
        self._prev = None
        self._calls = 0
        self._bounds = (grid.x[1], grid.x[-3])

    def __call__(self, t, state):
        self._calls += 1
        if (self._calls - 1) % self.stride:
            return
        snap = _Snapshot(t, np.array(state.amplitudes), 0, self.r_floor)
        if self._prev is not None:
            live = ~self.degenerate
            moved = _rk4_segment(self.x[live], self._prev, snap, self.grid, self.units,
                                 *self._bounds)
            bad = np.isnan(moved)
            idx = np.nonzero(live)[0]
            self.degenerate[idx[bad]] = True
            self.x[idx[~bad]] = moved[~bad]
        self._prev = snap
        self.times.append(t)
        self.positions.append(self.x.copy())

    def bundle(self, x_d: float | None = None, band: float | None = None) -> TrajectoryBundle:
        band = self.units.sigma1 if band is None else band
        pos = np.array(self.positions)
        return TrajectoryBundle(self.initial, np.array(self.times), pos,
                                [classify(p, x_d, band) for p in pos[-1]], self.degenerate.copy())


# -- initial conditions and critical trajectory ----------------------------------

def _bisect(f, lo, hi, iterations=200, tol=0.0):
    """Vectorised bisection for increasing ``f`` with ``f(lo) <= 0 <= f(hi)``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)) or np.all(hi - lo <= tol):
            break
        up = f(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def ensemble_positions(n: int, packet: PacketSpec, grid: SpatialGrid | None = None,
                       units: UnitSystem | None = None) -> np.ndarray:
    """Deterministic quantile sample of |psi0|^2: ``F^{-1}((i + 1/2)/n)``.

    The CDF is the trapezoid quadrature of the sampled density, exact for
    the piecewise-linear interpolant inside each cell.
    """
    if n < 1:
        raise InvalidParameterError("need at least one trajectory")
    units = units or UnitSystem()
    grid = grid or default_grid(units)
    rho = build_packet(packet, grid, units).density()
    dx = grid.dx
    cells = 0.5 * (rho[:-1] + rho[1:]) * dx
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    cdf /= cdf[-1]
    rho = rho / (cells.sum())

    def F(x):
        s = (x - grid.x_min) / dx
        j = np.clip(np.floor(s).astype(np.int64), 0, grid.n_points - 2)
        u = s - j
        return cdf[j] + (rho[j] * u + 0.5 * (rho[j + 1] - rho[j]) * u * u) * dx

    q = (np.arange(n) + 0.5) / n
    return _bisect(lambda x: F(x) - q, np.full(n, grid.x_min), np.full(n, grid.x_max))


def gaussian_tail(x, x0: float, sigma0: float):
    """Probability of a Gaussian |psi0|^2 beyond ``x``."""
    return 0.5 * erfc((np.asarray(x) - x0) / (math.sqrt(2.0) * sigma0))


def critical_initial_position(T_infinity: float, x0: float, sigma0: float) -> float:
    """Starting point of the trajectory separating transmitted from reflected paths.

    Solves ``T_infinity = erfc((x_c - x0)/(sqrt(2) sigma0)) / 2`` by bisection
    to an absolute residual below 1e-12.
    """
    if not 0.0 < T_infinity < 1.0:
        raise DomainError(f"T_infinity must lie in (0, 1), got {T_infinity!r}")

    def g(x):
        return T_infinity - gaussian_tail(x, x0, sigma0)

    lo, hi = x0 - 10.0 * sigma0, x0 + 10.0 * sigma0
    while g(lo) > 0:
        lo -= 10.0 * sigma0
    while g(hi) < 0:
        hi += 10.0 * sigma0
    # run to interval collapse; the residual is then far below 1e-12
    return float(_bisect(g, lo, hi))


def critical_point(T_infinity: float, x0: float, sigma0: float) -> CriticalPoint:
    return CriticalPoint(critical_initial_position(T_infinity, x0, sigma0), T_infinity)


# -- second-order check -------------------------------------------------------------

def quantum_force_residual(trajectory: Trajectory, snapshots: SnapshotRecorder,
                           schedule: BarrierSchedule | None, grid: SpatialGrid,
                           units: UnitSystem) -> tuple[np.ndarray, np.ndarray]:
    """``m x'' + d/dx (V + Q)`` along a path integrated over ``snapshots``.

    Acceleration comes from second differences of the positions, the force
    from central differences of the sampled fields interpolated to x(t).
    Returns ``(times, residual)`` for interior samples; NaN marks gaps in
    near-node regions.
    """
    t = np.asarray(trajectory.times)
    x = np.asarray(trajectory.positions)
    if len(t) < 3:
        raise InvalidParameterError("need at least three samples")
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    acc = 2.0 * (h1 * x[2:] - (h1 + h2) * x[1:-1] + h2 * x[:-2]) / (h1 * h2 * (h1 + h2))
    force = np.full(len(t) - 2, np.nan)
    sl = slice(snapshots.lo, snapshots.hi)
    xs = grid.x[sl]
    for k in range(1, len(t) - 1):
        state = snapshots.full_state(k)
        fields = pilot_fields(state, grid, units)
        v = sample_on_grid(schedule, grid, t[k]) if schedule is not None else np.zeros(grid.n_points)
        total = (v + fields.quantum_potential)[sl]
        dtotal = np.gradient(total, grid.dx)
        force[k - 1] = np.interp(x[k], xs, dtotal, left=np.nan, right=np.nan)
    return t[1:-1], units.mass * acc + force
