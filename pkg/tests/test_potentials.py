import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superarrivals.errors import InvalidParameterError
from superarrivals.grid import SpatialGrid
from superarrivals.potentials import BarrierSchedule, height_rate, potential_at, sample_on_grid

V0 = 37311.0
W_I, W_F = 0.004, 0.024
T_P, EPS = 8.0e-4, 3.0e-5


def linear_width(**kw):
    return BarrierSchedule("linear_width", V0, w_i=W_I, w_f=W_F, t_p=T_P, epsilon=EPS, **kw)


def ramp(a=0.1, b=0.9, kind="height_ramp", **kw):
    return BarrierSchedule(kind, V0, width=0.016, a=a, b=b, t_p=T_P, epsilon=EPS, **kw)


def test_linear_width_midpoint():
    dx = 1e-5
    x = 0.5 * (W_I + W_F) - dx
    assert potential_at(linear_width(), x, T_P + EPS / 2) == V0
    assert potential_at(linear_width(), 0.5 * (W_I + W_F) + dx, T_P + EPS / 2) == 0.0


def test_height_ramp_midpoint():
    assert potential_at(ramp(), 0.0, T_P + EPS / 2) == pytest.approx(0.275 * V0, rel=1e-14)


def test_height_ramp_off_before_perturbation():
    assert potential_at(ramp(), 0.0, 0.0) == 0.0
    assert potential_at(ramp(), 0.0, T_P) == 0.0


def test_edges_belong_to_barrier():
    s = BarrierSchedule("static_rect", V0, left_edge=0.0, width=0.01)
    assert potential_at(s, 0.0, 0.0) == V0
    assert potential_at(s, 0.01, 0.0) == V0
    assert potential_at(s, -1e-12, 0.0) == 0.0


def test_width_schedule_branches():
    s = linear_width()
    assert s.current_width(0.0) == W_I
    assert s.current_width(T_P) == W_I
    assert s.current_width(T_P + EPS) == pytest.approx(W_F, rel=1e-15)
    assert s.current_width(1.0) == W_F


def test_settled_linear_width_matches_static_final_barrier():
    grid = SpatialGrid(-0.01, 0.04, 5001)
    static = BarrierSchedule("static_rect", V0, left_edge=0.0, width=W_F)
    t = T_P + 2 * EPS
    np.testing.assert_array_equal(sample_on_grid(linear_width(), grid, t),
                                  sample_on_grid(static, grid, t))
    for x in np.linspace(-0.005, 0.03, 101):
        assert potential_at(linear_width(), x, t) == potential_at(static, x, t)


def test_aligned_width_gives_k_plus_one_nodes():
    grid = SpatialGrid(-1.0, 1.0, 2001)
    k = 17
    s = BarrierSchedule("static_rect", V0, left_edge=grid.x[900], width=k * grid.dx)
    v = sample_on_grid(s, grid, 0.0)
    assert np.count_nonzero(v == V0) == k + 1
    assert np.count_nonzero(v) == k + 1


def test_fractional_edge_weight():
    grid = SpatialGrid(-1.0, 1.0, 2001)
    right = grid.x[1000] + 0.25 * grid.dx
    s = BarrierSchedule("static_rect", V0, left_edge=grid.x[990], width=right - grid.x[990])
    v = sample_on_grid(s, grid, 0.0)
    assert v[1000] == V0
    assert v[1001] == pytest.approx(0.25 * V0, rel=1e-9)
    assert v[1002] == 0.0
    assert v[989] == 0.0


def test_double_barrier_after_ramp():
    grid = SpatialGrid(-0.05, 0.1, 15001)
    d = 0.02
    s = ramp(kind="double_height_ramp", separation=d)
    t = T_P + 2 * EPS
    v = sample_on_grid(s, grid, t)
    first = (grid.x >= -0.008 + 1e-9) & (grid.x <= 0.008 - 1e-9)
    second = (grid.x >= 0.008 + d + 1e-9) & (grid.x <= 0.024 + d - 1e-9)
    gap = (grid.x >= 0.008 + grid.dx * 1.01) & (grid.x <= 0.008 + d - grid.dx * 1.01)
    assert np.all(v[first] == V0)
    assert np.all(v[second] == V0)
    assert np.all(v[gap] == 0.0)
    assert potential_at(s, 0.008 + d / 2, t) == 0.0


def test_height_rate():
    lin = ramp(a=1.0, b=0.0)
    for t in np.linspace(T_P + EPS / 10, T_P + EPS, 7):
        assert height_rate(lin, t) == pytest.approx(V0 / EPS, rel=1e-14)
    quad_only = ramp(a=0.0, b=1.0)
    assert height_rate(quad_only, T_P + 1e-15) == pytest.approx(0.0, abs=1e-6 * V0 / EPS)
    assert height_rate(ramp(), T_P + EPS) == pytest.approx(1.9 * V0 / EPS, rel=1e-12)
    assert height_rate(ramp(), T_P + 2 * EPS) == 0.0
    assert height_rate(ramp(), 0.0) == 0.0
    with pytest.raises(InvalidParameterError):
        height_rate(linear_width(), T_P + EPS / 2)


def test_height_rate_is_derivative_of_height():
    s = ramp(a=0.3, b=0.7)
    h = 1e-3 * EPS
    for t in np.linspace(T_P + 0.1 * EPS, T_P + 0.9 * EPS, 5):
        numeric = V0 * (s.height_factor(t + h) - s.height_factor(t - h)) / (2 * h)
        assert height_rate(s, t) == pytest.approx(numeric, rel=1e-7)


@pytest.mark.parametrize("kwargs, match", [
    (dict(kind="linear_width", w_i=0.02, w_f=0.01), "w_f >= w_i"),
    (dict(kind="linear_width", w_i=0.0, w_f=0.01), "w_i > 0"),
    (dict(kind="height_ramp", width=0.01, a=0.5, b=0.6), "a \\+ b = 1"),
    (dict(kind="height_ramp", width=0.01, a=1.2, b=-0.2), "0 <= a"),
    (dict(kind="static_rect", width=-1.0), "width > 0"),
    (dict(kind="static_rect", width=0.01, epsilon=0.0), "epsilon"),
    (dict(kind="static_rect", width=0.01, t_p=-1.0), "t_p"),
    (dict(kind="parabolic", width=0.01), "kind"),
])
def test_schedule_validation(kwargs, match):
    kind = kwargs.pop("kind")
    with pytest.raises(InvalidParameterError, match=match):
        BarrierSchedule(kind, V0, **kwargs)


def test_breakpoints():
    assert linear_width().breakpoints() == (T_P, T_P + EPS)
    assert BarrierSchedule("static_rect", V0, width=0.01).breakpoints() == ()


@settings(max_examples=80, deadline=None)
@given(a=st.floats(0.0, 1.0), x=st.floats(-0.02, 0.03), kind=st.sampled_from(
    ["linear_width", "height_ramp", "double_height_ramp"]))
def test_continuity_across_branch_joins(a, x, kind):
    s = linear_width() if kind == "linear_width" else ramp(a=a, b=1.0 - a, kind=kind,
                                                               separation=0.004)
    for join in (T_P, T_P + EPS):
        before, after = join - 1e-9 * EPS, join + 1e-9 * EPS
        if kind == "linear_width":
            # a moving edge makes V discontinuous in t only at the edge itself
            assert s.current_width(after) - s.current_width(before) <= 3e-9 * (W_F - W_I)
        else:
            assert abs(potential_at(s, x, after) - potential_at(s, x, before)) <= 1e-6 * V0


@settings(max_examples=80, deadline=None)
@given(a=st.floats(0.0, 1.0), s1=st.floats(0.0, 1.2), s2=st.floats(0.0, 1.2))
def test_ramps_are_monotone(a, s1, s2):
    lo, hi = sorted((s1, s2))
    t_lo, t_hi = T_P + lo * EPS, T_P + hi * EPS
    r = ramp(a=a, b=1.0 - a)
    assert r.height_factor(t_lo) <= r.height_factor(t_hi) + 1e-15
    w = linear_width()
    assert w.current_width(t_lo) <= w.current_width(t_hi)


@settings(max_examples=60, deadline=None)
@given(shift=st.floats(0.0, 1.0), width_cells=st.floats(2.0, 40.0))
def test_sampling_is_continuous_in_edge_position(shift, width_cells):
    grid = SpatialGrid(-1.0, 1.0, 2001)
    left = grid.x[950]
    width = (width_cells + shift) * grid.dx
    eps = 1e-7 * grid.dx
    a = sample_on_grid(BarrierSchedule("static_rect", V0, left_edge=left, width=width), grid, 0.0)
    b = sample_on_grid(BarrierSchedule("static_rect", V0, left_edge=left, width=width + eps), grid, 0.0)
    assert np.max(np.abs(a - b)) <= V0 * (1e-6 + 1e-8)
    assert math.isclose(np.max(a), V0)
