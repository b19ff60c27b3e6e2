"""Run orchestration: single simulations, reference/perturbed pairs and parameter sweeps.

Everything returned here is expressed in paper units: times in t0, lengths
in sigma1, energies in E0, momenta in p0.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analysis import SuperarrivalReport, analyze_pair, t_d_sensitivity
from .bohmian import TrajectoryBundle, TrajectoryEnsemble, critical_initial_position, ensemble_positions
from .config import SWEEP_AXES, RunConfig, serialize_config
from .errors import (ConfigurationError, InvalidParameterError, SuperarrivalError,
                     UndefinedSectorError, WindowOpenError)
from .observables import (ExpectationObserver, ExpectationSeries, NormObserver,
                          TransmissionObserver, TransmissionSeries, free_transmission,
                          transmitted_expectations)
from .propagator import propagate
from .wavepackets import build_packet

logger = logging.getLogger(__name__)

SUPERARRIVAL = "superarrival"
NO_SUPERARRIVAL = "none"
WINDOW_OPEN = "window_open"
FAILED = "error"


@dataclass
class Trajectories:
    """A quantile ensemble from one run plus its critical starting point (sigma1 units)."""

    bundle: TrajectoryBundle
    T_final: float
    x_c: float | None

    def classification_mismatches(self, margin: float) -> int:
        """Paths on the wrong side of ``x_c`` by more than ``margin`` (undecided paths ignored)."""
        if self.x_c is None:
            return 0
        x0 = self.bundle.initial_positions
        cls = np.asarray(self.bundle.classifications)
        wrong_t = (x0 > self.x_c + margin) & (cls == "reflected")
        wrong_r = (x0 < self.x_c - margin) & (cls == "transmitted")
        return int(np.sum(wrong_t | wrong_r))


def _rescale_bundle(bundle: TrajectoryBundle, t0: float, L: float) -> TrajectoryBundle:
    return TrajectoryBundle(bundle.initial_positions / L, bundle.times / t0, bundle.positions / L,
                            list(bundle.classifications), bundle.degenerate)


@dataclass
class RunOutcome:
    """One propagation with its observables (paper units)."""

    label: str
    transmission: list[TransmissionSeries]
    norm_drift: float
    final_state: object
    expectations_final: tuple[float, float, float] | None = None
    expectation_series: ExpectationSeries | None = None
    trajectories: Trajectories | None = None
    snapshots: list = field(default_factory=list)


def _final_expectations(config, state, schedule):
    u = config.unit_system()
    try:
        e = transmitted_expectations(state, config.spatial_grid(), u, schedule, config.x_d())
    except UndefinedSectorError:
        return None
    return (e.energy / u.E0, e.momentum / u.p0, e.position / u.sigma1)


def _critical(config, T_final):
    if config.packet.kind != "gaussian" or not 0.0 < T_final < 1.0:
        return None
    u = config.unit_system()
    x0 = config.packet.x0 * u.sigma1
    return critical_initial_position(T_final, x0, u.sigma0) / u.sigma1


def _run(config: RunConfig, schedule, label: str, x_d_values: Sequence[float],
         breakpoints, t_p, trajectories: bool = False, expectations: bool = False,
         snapshot_stride: int | None = None) -> RunOutcome:
    u = config.unit_system()
    grid = config.spatial_grid()
    packet = config.packet_spec()
    psi0 = build_packet(packet, grid, u)
    xs = [v * u.sigma1 for v in x_d_values]
    t_obs = TransmissionObserver(grid, xs)
    n_obs = NormObserver(grid)
    observers = [t_obs, n_obs]
    ens = exp_obs = None
    snaps = []
    if trajectories and config.analysis.n_trajectories > 0:
        starts = ensemble_positions(config.analysis.n_trajectories, packet, grid, u)
        ens = TrajectoryEnsemble(starts, grid, u, stride=config.analysis.trajectory_stride)
        observers.append(ens)
    if expectations:
        exp_obs = ExpectationObserver(grid, u, schedule, xs[0], config.analysis.expectation_stride)
        observers.append(exp_obs)
    if snapshot_stride:
        calls = [0]

        def keep(t, state):
            if calls[0] % snapshot_stride == 0:
                snaps.append((t / u.t0, np.array(state.amplitudes)))
            calls[0] += 1

        observers.append(keep)
    record = propagate(psi0, schedule, grid, u, config.propagator_config(), observers, breakpoints)
    t_p_nat = None if t_p is None else t_p * u.t0
    series = [t_obs.series(label, t_p_nat, i).rescaled(u.t0, u.sigma1) for i in range(len(xs))]
    out = RunOutcome(label, series, n_obs.max_drift, record.final,
                     _final_expectations(config, record.final, schedule), snapshots=snaps)
    if exp_obs is not None:
        s = exp_obs.series()
        out.expectation_series = ExpectationSeries(s.times / u.t0, s.energy_T / u.E0,
                                                   s.momentum_T / u.p0, s.position_T / u.sigma1)
    if ens is not None:
        bundle = ens.bundle(xs[0])
        T_final = series[0].final
        out.trajectories = Trajectories(_rescale_bundle(bundle, u.t0, u.sigma1), T_final,
                                        _critical(config, T_final))
    return out


def simulate(config: RunConfig, trajectories: bool = False, snapshots: bool = False) -> RunOutcome:
    """Propagate the configured packet through the configured schedule."""
    config.validate()
    schedule = config.barrier()
    u = config.unit_system()
    t_p = None if schedule is None or not schedule.time_dependent else config.schedule.t_p
    label = "perturbed" if t_p is not None else ("free" if schedule is None else "static")
    return _run(config, schedule, label, (config.analysis.x_d,), None, t_p,
                trajectories=trajectories, expectations=True,
                snapshot_stride=config.output.snapshot_stride if snapshots else None)


@dataclass
class PairResult:
    """Reference and perturbed runs with one report per detector plane (paper units)."""

    config: RunConfig
    x_d_values: tuple[float, ...]
    reference: RunOutcome
    perturbed: RunOutcome
    reports: list[SuperarrivalReport | None]
    statuses: list[str]
    open_t_d: list[float | None]

    @property
    def reference_series(self) -> TransmissionSeries:
        return self.reference.transmission[0]

    @property
    def perturbed_series(self) -> TransmissionSeries:
        return self.perturbed.transmission[0]

    @property
    def report(self) -> SuperarrivalReport | None:
        return self.reports[0]

    @property
    def status(self) -> str:
        return self.statuses[0]

    @property
    def T_infinity(self) -> tuple[float, float]:
        """Final (reference, perturbed) transmission at the first detector."""
        return self.reference_series.final, self.perturbed_series.final

    def sensitivity(self, index: int = 0) -> dict:
        return t_d_sensitivity(self.reference.transmission[index], self.perturbed.transmission[index])


def _analyze(reference, perturbed, delta_dev):
    try:
        report = analyze_pair(reference, perturbed, delta_dev)
    except WindowOpenError as exc:
        return None, WINDOW_OPEN, exc.t_d
    return report, (NO_SUPERARRIVAL if report is None else SUPERARRIVAL), None


def _cache_key(config: RunConfig) -> str:
    return serialize_config(dataclasses.replace(config, output=type(config.output)()))


def _cached(cache, key, x_d_values, trajectories):
    """A stored pair whose detectors start with ``x_d_values`` and that has trajectories if needed."""
    for pair in cache.get(key, ()):
        has_traj = pair.perturbed.trajectories is not None
        if pair.x_d_values[:len(x_d_values)] == x_d_values and (has_traj or not trajectories):
            return pair
    return None


def run_pair(config: RunConfig, x_d_values: Sequence[float] | None = None,
             trajectories: bool = False, cache: dict | None = None) -> PairResult:
    """Propagate the perturbed schedule and its reference on a shared time axis.

    The reference is the initial static barrier for width growth and free
    propagation for height ramps from zero; for a Gaussian packet the free
    curve is the closed form unless ``analysis.free_reference = "numeric"``.
    ``x_d_values`` (sigma1) adds detector planes; reports follow their order.
    A ``cache`` dict lets repeated calls reuse earlier pairs; a hit may carry
    extra detector planes after the requested ones.
    """
    config.validate()
    x_d_values = tuple(float(v) for v in (x_d_values or (config.analysis.x_d,)))
    key = _cache_key(config)
    if cache is not None:
        hit = _cached(cache, key, x_d_values, trajectories)
        if hit is not None:
            return hit
    perturbed = config.barrier()
    if perturbed is None or not perturbed.time_dependent:
        raise ConfigurationError("a pair needs a time-dependent schedule")
    u = config.unit_system()
    bps = perturbed.breakpoints()
    t_p = config.schedule.t_p
    pert = _run(config, perturbed, "perturbed", x_d_values, bps, t_p, trajectories)
    ref_schedule = config.reference_barrier()
    analytic = (ref_schedule is None and config.packet.kind == "gaussian"
                and config.analysis.free_reference == "analytic")
    if analytic:
        spec = config.packet_spec()
        times = pert.transmission[0].times
        series = [TransmissionSeries(times, free_transmission(times * u.t0, x * u.sigma1, spec.x0,
                                                              spec.sigma0, spec.p0, u),
                                     x, "free_analytic") for x in x_d_values]
        ref = RunOutcome("free_analytic", series, 0.0, None)
    else:
        label = "static" if ref_schedule is not None else "free"
        ref = _run(config, ref_schedule, label, x_d_values, bps, None, trajectories)
    reports, statuses, open_t_d = [], [], []
    for r, p in zip(ref.transmission, pert.transmission):
        report, status, t_d = _analyze(r, p, config.analysis.delta_dev)
        reports.append(report)
        statuses.append(status)
        open_t_d.append(t_d)
    result = PairResult(config, x_d_values, ref, pert, reports, statuses, open_t_d)
    if cache is not None:
        cache.setdefault(key, []).append(result)
    return result


# -- sweeps ---------------------------------------------------------------------------

@dataclass
class SweepPoint:
    value: float
    report: SuperarrivalReport | None
    T_reference: float
    T_perturbed: float
    status: str
    error: str = ""


@dataclass
class SweepResult:
    axis: str
    points: list[SweepPoint]

    def values(self, name: str) -> np.ndarray:
        """Per-point report field (``eta``, ``delta_t`` ...), NaN where there is no report."""
        return np.array([getattr(p.report, name) if p.report is not None else math.nan
                         for p in self.points])


def with_axis(config: RunConfig, axis: str, value: float) -> RunConfig:
    """Copy of ``config`` with one sweep parameter set (paper units)."""
    s, pk, an = config.schedule, config.packet, config.analysis
    if axis in ("epsilon", "w_f", "V0", "width"):
        s = dataclasses.replace(s, **{axis: float(value)})
    elif axis == "b":
        s = dataclasses.replace(s, b=float(value), a=1.0 - float(value))
    elif axis == "d":
        s = dataclasses.replace(s, separation=float(value))
    elif axis == "alpha":
        pk = dataclasses.replace(pk, kind="non_gaussian", alpha=float(value))
    elif axis == "x_d":
        an = dataclasses.replace(an, x_d=float(value))
    else:
        raise InvalidParameterError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    return dataclasses.replace(config, schedule=s, packet=pk, analysis=an)


def _point(value, pair: PairResult, index: int = 0) -> SweepPoint:
    return SweepPoint(value, pair.reports[index], pair.reference.transmission[index].final,
                      pair.perturbed.transmission[index].final, pair.statuses[index])


def sweep(config: RunConfig, axis: str, values: Sequence[float], threads: int = 1,
          cache: dict | None = None) -> SweepResult:
    """run_pair at every axis value; failures are recorded per point.

    Points run concurrently on up to ``threads`` workers (the step kernel
    releases the GIL). A detector-plane sweep needs a single pair.
    """
    values = [float(v) for v in values]
    if len(values) < 2:
        raise InvalidParameterError("a sweep needs at least two values")
    if not all(math.isfinite(v) for v in values):
        raise InvalidParameterError("sweep values must be finite")
    if threads < 1:
        raise InvalidParameterError("threads must be at least 1")
    order = sorted(values)
    if axis == "x_d":
        pair = run_pair(config, order, cache=cache)
        return SweepResult(axis, [_point(v, pair, i) for i, v in enumerate(order)])

    def one(value):
        try:
            return _point(value, run_pair(with_axis(config, axis, value).validate(), cache=cache))
        except (SuperarrivalError, ArithmeticError) as exc:
            logger.warning("sweep point %s = %r failed: %s", axis, value, exc)
            return SweepPoint(value, None, math.nan, math.nan, FAILED, f"{type(exc).__name__}: {exc}")

    with_axis(config, axis, order[0])  # reject unknown axes before starting workers
    if threads == 1:
        points = [one(v) for v in order]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, order))
    return SweepResult(axis, points)
