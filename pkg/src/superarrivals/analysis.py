"""Superarrival window detection and the superarrivality measure eta."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateReferenceError, InvalidParameterError, WindowOpenError
from .observables import TransmissionSeries

DELTA_DEV = 1e-3


@dataclass(frozen=True)
class SuperarrivalReport:
    t_d: float
    t_c: float
    delta_t: float
    I_p: float
    I_s: float
    eta: float

    def as_dict(self) -> dict:
        return asdict(self)


def _check_axes(reference: TransmissionSeries, perturbed: TransmissionSeries):
    if reference.times.shape != perturbed.times.shape or not np.array_equal(
            reference.times, perturbed.times):
        raise InvalidParameterError("reference and perturbed series need the same time axis")


def detect_window(reference: TransmissionSeries, perturbed: TransmissionSeries,
                  delta_dev: float = DELTA_DEV, t_start: float | None = None):
    """Locate the superarrival window ``(t_d, t_c)``.

    ``t_d`` is the first sample at or after ``t_start`` (default: the
    perturbed run's ``t_p``) where perturbed exceeds reference by more than
    ``delta_dev``. ``t_c`` is the first later sign change of the difference,
    interpolated linearly between samples.

    Returns None when the curves never deviate.

    Raises
    ------
    WindowOpenError
        If the deviation starts but the curves do not cross before the end.
    """
    if not delta_dev > 0:
        raise InvalidParameterError("delta_dev must be positive")
    _check_axes(reference, perturbed)
    t = perturbed.times
    if t_start is None:
        t_start = perturbed.t_p if perturbed.t_p is not None else t[0]
    diff = perturbed.values - reference.values
    candidates = np.nonzero((t >= t_start) & (diff > delta_dev))[0]
    if candidates.size == 0:
        return None
    i = int(candidates[0])
    t_d = float(t[i])
    after = np.nonzero(diff[i + 1:] <= 0.0)[0]
    if after.size == 0:
        raise WindowOpenError(f"curves still apart at the end of the run (t_d = {t_d!r})", t_d)
    k = i + 1 + int(after[0])
    d0, d1 = diff[k - 1], diff[k]
    t_c = float(t[k - 1] + (t[k] - t[k - 1]) * d0 / (d0 - d1))
    return t_d, t_c


def window_integral(times: np.ndarray, values: np.ndarray, a: float, b: float) -> float:
    """Trapezoid integral over [a, b] with linearly interpolated end values."""
    inside = (times > a) & (times < b)
    t = np.concatenate([[a], times[inside], [b]])
    v = np.concatenate([[np.interp(a, times, values)], values[inside],
                        [np.interp(b, times, values)]])
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))


def superarrivality(reference: TransmissionSeries, perturbed: TransmissionSeries,
                    window: tuple[float, float]) -> SuperarrivalReport:
    """Areas under both curves across the window and ``eta = (I_p - I_s)/I_s``."""
    _check_axes(reference, perturbed)
    t_d, t_c = window
    if not t_d < t_c:
        raise InvalidParameterError("window needs t_d < t_c")
    I_p = window_integral(perturbed.times, perturbed.values, t_d, t_c)
    I_s = window_integral(reference.times, reference.values, t_d, t_c)
    if I_s == 0.0:
        raise DegenerateReferenceError("reference area vanishes over the window")
    return SuperarrivalReport(t_d, t_c, t_c - t_d, I_p, I_s, (I_p - I_s) / I_s)


def analyze_pair(reference: TransmissionSeries, perturbed: TransmissionSeries,
                 delta_dev: float = DELTA_DEV) -> SuperarrivalReport | None:
    """Window detection followed by eta; None when there is no superarrival."""
    window = detect_window(reference, perturbed, delta_dev)
    if window is None:
        return None
    return superarrivality(reference, perturbed, window)


def t_d_sensitivity(reference: TransmissionSeries, perturbed: TransmissionSeries,
                    thresholds: Sequence[float] = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)
                    ) -> dict[float, float | None]:
    """Onset time ``t_d`` for a range of deviation thresholds."""
    _check_axes(reference, perturbed)
    t = perturbed.times
    t_start = perturbed.t_p if perturbed.t_p is not None else t[0]
    diff = perturbed.values - reference.values
    out = {}
    for thr in thresholds:
        hits = np.nonzero((t >= t_start) & (diff > thr))[0]
        out[thr] = float(t[hits[0]]) if hits.size else None
    return out
