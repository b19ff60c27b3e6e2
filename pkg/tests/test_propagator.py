import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from superarrivals import _kernels
from superarrivals.errors import InvalidParameterError
from superarrivals.grid import SpatialGrid, WaveState, norm
from superarrivals.observables import NormObserver, expectation_values
from superarrivals.potentials import BarrierSchedule, sample_on_grid
from superarrivals.propagator import PropagatorConfig, propagate, step, time_grid
from superarrivals.wavepackets import PacketSpec, build_packet


def _free_run(grid, units, spec, t_end, dt, observers=()):
    cfg = PropagatorConfig(dt=dt, t_end=t_end)
    return propagate(build_packet(spec, grid, units), None, grid, units, cfg, observers)


def test_thomas_matches_banded_solver(rng):
    n = 500
    diag = 1.0 + 1j * rng.uniform(0.1, 3.0, n) + rng.uniform(0, 1, n)
    off = complex(-0.3, -0.4)
    rhs = rng.normal(size=n) + 1j * rng.normal(size=n)
    cp, inv, ok = _kernels.factor(diag, off)
    assert ok
    ours = _kernels.solve_tridiagonal(off, cp, inv, rhs)
    bands = np.zeros((3, n), complex)
    bands[0, 1:] = off
    bands[1] = diag
    bands[2, :-1] = off
    np.testing.assert_allclose(ours, solve_banded((1, 1), bands, rhs), rtol=1e-12, atol=1e-13)


def test_cn_step_matches_dense_cayley_form(units):
    grid = SpatialGrid(-40 * units.sigma0, 40 * units.sigma0, 257)
    psi = build_packet(PacketSpec(x0=0.0), grid, units)
    barrier = BarrierSchedule("static_rect", 3000.0, left_edge=0.2, width=0.3)
    dt = 1e-6
    ours = step(psi, barrier, grid, units, dt).amplitudes
    n = grid.n_points - 2
    alpha = units.hbar**2 / (2 * units.mass * grid.dx**2)
    v = sample_on_grid(barrier, grid, dt / 2)[1:-1]
    H = np.diag(2 * alpha + v) - alpha * (np.eye(n, k=1) + np.eye(n, k=-1))
    c = 1j * dt / (2 * units.hbar)
    dense = np.linalg.solve(np.eye(n) + c * H, (np.eye(n) - c * H) @ psi.amplitudes[1:-1])
    np.testing.assert_allclose(ours[1:-1], dense, rtol=0, atol=1e-11)
    assert ours[0] == 0 and ours[-1] == 0


def test_single_free_step_preserves_norm(small_grid, gaussian, units):
    psi = build_packet(gaussian, small_grid, units)
    after = step(psi, None, small_grid, units, 40 * units.t0 / 8192)
    assert after.time == pytest.approx(40 * units.t0 / 8192)
    assert norm(after, small_grid) == pytest.approx(norm(psi, small_grid), rel=1e-12)


def test_free_centroid_moves_classically(small_grid, units):
    spec = PacketSpec(x0=-20 * units.sigma0).resolved(units)
    t_end = 20 * units.t0
    run = _free_run(small_grid, units, spec, t_end, 40 * units.t0 / 8192)
    centre = expectation_values(run.final, small_grid, units).position
    expected = spec.x0 + spec.p0 * t_end / units.mass
    assert abs(centre - expected) < 1e-3 * abs(expected - spec.x0)


def test_free_width_follows_dispersion(small_grid, units):
    spec = PacketSpec(x0=-20 * units.sigma0).resolved(units)
    t_end = 20 * units.t0
    run = _free_run(small_grid, units, spec, t_end, 40 * units.t0 / 8192)
    rho = run.final.density()
    x = small_grid.x
    mean = np.sum(x * rho) / np.sum(rho)
    width = math.sqrt(np.sum((x - mean) ** 2 * rho) / np.sum(rho))
    expected = spec.sigma0 * math.sqrt(1 + (units.hbar * t_end / (2 * units.mass * spec.sigma0**2)) ** 2)
    assert width == pytest.approx(expected, rel=1e-3)


def test_constant_potential_is_a_global_phase_up_to_second_order(small_grid, gaussian, units):
    # the Cayley map is not additive in V, so the phase-only relation holds to O(dt^2)
    everywhere = BarrierSchedule("static_rect", 5000.0, left_edge=small_grid.x_min - 1.0,
                                 width=small_grid.x_max - small_grid.x_min + 2.0)
    psi0 = build_packet(gaussian, small_grid, units)

    def discrepancy(dt):
        cfg = PropagatorConfig(dt=dt, t_end=2 * units.t0)
        free = propagate(psi0, None, small_grid, units, cfg).final.amplitudes
        shifted = propagate(psi0, everywhere, small_grid, units, cfg).final.amplitudes
        big = np.abs(free) > 1e-3 * np.abs(free).max()
        phase = np.angle(shifted[big] / free[big])
        return np.max(np.abs(np.abs(shifted) ** 2 - np.abs(free) ** 2)), np.ptp(phase)

    dt = 40 * units.t0 / 8192
    d1, p1 = discrepancy(dt)
    d2, p2 = discrepancy(dt / 2)
    assert d1 < 1e-3 and p1 < 1e-3
    assert 3.5 < d1 / d2 < 4.5
    assert 3.5 < p1 / p2 < 4.5


def test_norm_conserved_over_full_step_count(small_grid, gaussian, units):
    barrier = BarrierSchedule("linear_width", 1.5 * units.E0, w_i=0.004, w_f=0.024,
                              t_p=2 * units.t0, epsilon=0.27 * units.t0)
    obs = NormObserver(small_grid)
    cfg = PropagatorConfig(dt=40 * units.t0 / 8192, t_end=8 * units.t0)
    propagate(build_packet(gaussian, small_grid, units), barrier, small_grid, units, cfg, [obs])
    assert obs.max_drift < 1e-9


def test_second_order_in_time(units):
    grid = SpatialGrid(-40 * units.sigma0, 40 * units.sigma0, 4097)
    spec = PacketSpec(x0=-20 * units.sigma0).resolved(units)
    t_end = 10 * units.t0
    base = 40 * units.t0 / 256

    def centre(dt):
        run = _free_run(grid, units, spec, t_end, dt)
        return expectation_values(run.final, grid, units).position

    reference = centre(base / 8)
    e1 = abs(centre(base) - reference)
    e2 = abs(centre(base / 2) - reference)
    assert 3.0 < e1 / e2 < 5.0


def test_time_reversal_recovers_initial_state(small_grid, gaussian, units):
    barrier = BarrierSchedule("static_rect", 1.5 * units.E0, left_edge=0.0, width=0.004)
    dt = 40 * units.t0 / 8192
    psi0 = build_packet(gaussian, small_grid, units)
    cfg = PropagatorConfig(dt=dt, t_end=400 * dt)
    forward = propagate(psi0, barrier, small_grid, units, cfg).final
    back = propagate(WaveState(np.conj(forward.amplitudes)), barrier, small_grid, units, cfg).final
    np.testing.assert_allclose(np.conj(back.amplitudes), psi0.amplitudes, rtol=0, atol=1e-8)


def test_late_perturbation_is_identical_to_static_run(small_grid, gaussian, units):
    cfg = PropagatorConfig(dt=40 * units.t0 / 8192, t_end=3 * units.t0)
    static = BarrierSchedule("static_rect", 1.5 * units.E0, left_edge=0.0, width=0.004)
    late = BarrierSchedule("linear_width", 1.5 * units.E0, w_i=0.004, w_f=0.024,
                           t_p=5 * units.t0, epsilon=0.27 * units.t0)
    psi0 = build_packet(gaussian, small_grid, units)
    a = propagate(psi0, static, small_grid, units, cfg).final.amplitudes
    b = propagate(psi0, late, small_grid, units, cfg).final.amplitudes
    np.testing.assert_array_equal(a, b)


def test_runs_are_bit_identical(small_grid, gaussian, units):
    cfg = PropagatorConfig(dt=40 * units.t0 / 8192, t_end=units.t0)
    barrier = BarrierSchedule("height_ramp", 2 * units.E0, width=0.016, a=0.1, b=0.9,
                              t_p=0.2 * units.t0, epsilon=0.27 * units.t0)
    psi0 = build_packet(gaussian, small_grid, units)
    a = propagate(psi0, barrier, small_grid, units, cfg).final.amplitudes
    b = propagate(psi0, barrier, small_grid, units, cfg).final.amplitudes
    assert a.tobytes() == b.tobytes()


def test_time_grid_lands_on_breakpoints(units):
    cfg = PropagatorConfig.default(units)
    t_p, eps = 7.14 * units.t0, 0.27 * units.t0
    ticks = time_grid(cfg, (t_p, t_p + eps))
    assert t_p in ticks and t_p + eps in ticks
    assert ticks[0] == 0.0 and ticks[-1] == cfg.t_end
    steps = np.diff(ticks)
    assert np.all(np.abs(steps / cfg.dt - 1.0) < 0.01)
    assert np.count_nonzero((ticks > t_p) & (ticks < t_p + eps)) >= 54


def test_observer_schedule(small_grid, gaussian, units):
    seen = []
    cfg = PropagatorConfig(dt=units.t0 / 10, t_end=units.t0 * 2.3, store_every=4)
    record = propagate(build_packet(gaussian, small_grid, units), None, small_grid, units, cfg,
                       [lambda t, s: seen.append(t)])
    assert seen[0] == 0.0
    assert seen[-1] == pytest.approx(cfg.t_end)
    np.testing.assert_array_equal(record.times, seen)
    # 23 steps: t = 0, steps 4, 8, ..., 20, and the final step
    assert len(seen) == 1 + 5 + 1


def test_observer_state_is_read_only(small_grid, gaussian, units):
    def poke(t, state):
        state.amplitudes[5] = 1.0

    cfg = PropagatorConfig(dt=units.t0, t_end=units.t0)
    with pytest.raises(ValueError):
        propagate(build_packet(gaussian, small_grid, units), None, small_grid, units, cfg, [poke])


def test_phase_bound_and_config_validation(units):
    with pytest.raises(InvalidParameterError):
        PropagatorConfig(dt=0.0, t_end=1.0)
    with pytest.raises(InvalidParameterError):
        PropagatorConfig(dt=1.0, t_end=-1.0)
    with pytest.raises(InvalidParameterError):
        PropagatorConfig(dt=1.0, t_end=1.0, store_every=0)
    coarse = PropagatorConfig(dt=1e-4, t_end=1e-3)
    barrier = BarrierSchedule("static_rect", 1.5 * units.E0, width=0.004)
    with pytest.raises(InvalidParameterError):
        coarse.check_phase_bound(barrier, units)
    fine = PropagatorConfig.default(units)
    fine.check_phase_bound(barrier, units)
    assert fine.dt * 1.5 * units.E0 < 0.5
