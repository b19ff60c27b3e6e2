"""Time-dependent rectangular barriers V(x, t)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .grid import SpatialGrid

_SNAP = 1e-9

KINDS = ("static_rect", "linear_width", "height_ramp", "double_height_ramp")


@dataclass(frozen=True)
class BarrierSchedule:
    """A rectangular barrier whose width or height may change during [t_p, t_p + epsilon].

    Geometry per kind (natural units):

    ``static_rect``
        ``[left_edge, left_edge + width]`` at constant height ``V0``.
    ``linear_width``
        ``[0, w(t)]`` with ``w`` growing linearly from ``w_i`` to ``w_f``.
    ``height_ramp``
        ``[-width/2, width/2]`` with height ``V0 * (a s + b s^2)``,
        ``s = (t - t_p)/epsilon``, switched on from zero.
    ``double_height_ramp``
        two ramped barriers of ``width`` each, the second starting a gap
        ``separation`` to the right of the first.
    """

    kind: str
    V0: float
    left_edge: float = 0.0
    width: float | None = None
    w_i: float | None = None
    w_f: float | None = None
    a: float = 1.0
    b: float = 0.0
    separation: float = 0.0
    t_p: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"schedule kind must be one of {KINDS}, got {self.kind!r}")
        if not math.isfinite(self.V0):
            raise InvalidParameterError("V0 must be finite")
        if not self.epsilon > 0:
            raise InvalidParameterError("epsilon must be positive")
        if not self.t_p >= 0:
            raise InvalidParameterError("t_p must be non-negative")
        if self.kind == "linear_width":
            if self.w_i is None or self.w_f is None:
                raise InvalidParameterError("linear_width needs w_i and w_f")
            if not self.w_i > 0:
                raise InvalidParameterError("linear_width requires w_i > 0")
            if not self.w_f >= self.w_i:
                raise InvalidParameterError("linear_width requires w_f >= w_i")
        else:
            if self.width is None or not self.width > 0:
                raise InvalidParameterError(f"{self.kind} requires width > 0")
        if self.kind in ("height_ramp", "double_height_ramp"):
            if not (0.0 <= self.a <= 1.0 and 0.0 <= self.b <= 1.0):
                raise InvalidParameterError("height ramp requires 0 <= a <= 1 and 0 <= b <= 1")
            if abs(self.a + self.b - 1.0) > 1e-12:
                raise InvalidParameterError(f"height ramp requires a + b = 1, got a + b = {self.a + self.b!r}")
        if self.kind == "double_height_ramp" and not self.separation >= 0:
            raise InvalidParameterError("double_height_ramp requires separation >= 0")

    @property
    def time_dependent(self) -> bool:
        return self.kind != "static_rect"

    def breakpoints(self) -> tuple[float, ...]:
        """Instants where the schedule changes branch."""
        if not self.time_dependent:
            return ()
        return (self.t_p, self.t_p + self.epsilon)

    def ramp_fraction(self, t: float) -> float:
        """Progress ``s`` of the perturbation in [0, 1]."""
        if t <= self.t_p:
            return 0.0
        if t <= self.t_p + self.epsilon:
            return (t - self.t_p) / self.epsilon
        return 1.0

    def current_width(self, t: float) -> float:
        if self.kind == "linear_width":
            return self.w_i + (self.w_f - self.w_i) * self.ramp_fraction(t)
        return self.width

    def height_factor(self, t: float) -> float:
        if self.kind in ("static_rect", "linear_width"):
            return 1.0
        s = self.ramp_fraction(t)
        if s >= 1.0:
            return 1.0
        return self.a * s + self.b * s * s

    def segments(self, t: float) -> tuple[tuple[float, float, float], ...]:
        """The potential at time ``t`` as ``(left, right, height)`` plateaus."""
        if self.kind == "static_rect":
            return ((self.left_edge, self.left_edge + self.width, self.V0),)
        if self.kind == "linear_width":
            return ((0.0, self.current_width(t), self.V0),)
        h = self.V0 * self.height_factor(t)
        half = 0.5 * self.width
        if self.kind == "height_ramp":
            return ((-half, half, h),)
        second = half + self.separation
        return ((-half, half, h), (second, second + self.width, h))


def potential_at(schedule: BarrierSchedule, x: float, t: float) -> float:
    """Exact V(x, t); barrier edges belong to the barrier."""
    return float(sum(h for left, right, h in schedule.segments(t) if left <= x <= right))


def sample_on_grid(schedule: BarrierSchedule, grid: SpatialGrid, t: float) -> np.ndarray:
    """Node values of V(., t).

    Nodes inside a plateau take its height. The first node outside each edge
    takes the height times the covered fraction of the cell between it and
    the barrier, so V varies continuously as an edge sweeps across a cell.
    """
    v = np.zeros(grid.n_points)
    dx = grid.dx
    x = grid.x
    for left, right, h in schedule.segments(t):
        if h == 0.0:
            continue
        lo = max(int(math.floor((left - grid.x_min) / dx)) - 1, 0)
        hi = min(int(math.ceil((right - grid.x_min) / dx)) + 2, grid.n_points)
        if hi <= lo:
            continue
        xs = x[lo:hi]
        cover = np.clip(1.0 + np.minimum(right - xs, xs - left) / dx, 0.0, 1.0)
        # edges sitting on a node up to round-off count as aligned
        cover[cover < _SNAP] = 0.0
        cover[cover > 1.0 - _SNAP] = 1.0
        v[lo:hi] += h * cover
    return v


def height_rate(schedule: BarrierSchedule, t: float) -> float:
    """d(height)/dt of a ramped barrier: ``V0 (a/eps + 2 (1 - a)(t - t_p)/eps^2)`` inside the ramp."""
    if schedule.kind not in ("height_ramp", "double_height_ramp"):
        raise InvalidParameterError("height_rate is defined for height ramps only")
    if not schedule.t_p < t <= schedule.t_p + schedule.epsilon:
        return 0.0
    a, eps = schedule.a, schedule.epsilon
    return schedule.V0 * (a / eps + 2.0 * (1.0 - a) * (t - schedule.t_p) / eps**2)
