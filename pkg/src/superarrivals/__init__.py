"""Wavepacket scattering off time-dependent rectangular barriers.

Crank-Nicolson propagation, transmission and transmitted-sector
observables, Bohmian trajectories, superarrival windows and parameter
sweeps.
"""

from .analysis import (DELTA_DEV, SuperarrivalReport, analyze_pair, detect_window,
                       superarrivality, t_d_sensitivity, window_integral)
from .bohmian import (CriticalPoint, SnapshotRecorder, Trajectory, TrajectoryBundle,
                      TrajectoryEnsemble, classify, critical_initial_position, critical_point,
                      ensemble_positions, integrate_trajectory, quantum_force_residual)
from .config import RunConfig, parse_config, serialize_config
from .errors import (ConfigSyntaxError, ConfigurationError, ConfigValidationError,
                     DegenerateReferenceError, DivergenceError, DomainError,
                     IntegrationDegenerateError, InvalidParameterError, NumericalError,
                     ShapeError, SuperarrivalError, UndefinedSectorError, UnsupportedError,
                     WindowOpenError)
from .experiments import PairResult, SweepPoint, SweepResult, run_pair, simulate, sweep, with_axis
from .grid import (SpatialGrid, UnitSystem, WaveState, default_grid, interval_norm, make_units,
                   norm, partial_norm)
from .observables import (ExpectationObserver, NormObserver, PilotFields, TransmissionObserver,
                          TransmissionSeries, expectation_values, free_transmission, pilot_fields,
                          probability_current, transmission, transmitted_expectations)
from .potentials import BarrierSchedule, height_rate, potential_at, sample_on_grid
from .propagator import PropagatorConfig, RunRecord, propagate, step, time_grid
from .wavepackets import PacketSpec, build_packet, initial_energy, packet_profile

__all__ = [name for name in dir() if not name.startswith("_")]
