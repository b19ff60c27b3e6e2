"""Initial states: the Gaussian packet and its sine-modulated generalisation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidParameterError, UnsupportedError
from .grid import SpatialGrid, UnitSystem, WaveState, norm

# amplitudes below this are stored as exact zeros so the propagator never
# touches subnormal floats
FLUSH = 1e-150

WALL_TOLERANCE = 1e-12

KINDS = ("gaussian", "non_gaussian")


@dataclass(frozen=True)
class PacketSpec:
    """Initial packet parameters in natural units.

    ``None`` fields fall back to the unit system: ``x0 = -6 sigma1``,
    ``sigma0`` and ``p0`` from :class:`UnitSystem`.
    """

    kind: str = "gaussian"
    x0: float | None = None
    sigma0: float | None = None
    p0: float | None = None
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"packet kind must be one of {KINDS}, got {self.kind!r}")
        if self.sigma0 is not None and not self.sigma0 > 0:
            raise InvalidParameterError("packet sigma0 must be positive")
        if not math.isfinite(self.alpha):
            raise InvalidParameterError("alpha must be finite")

    def resolved(self, units: UnitSystem) -> "PacketSpec":
        return PacketSpec(
            kind=self.kind,
            x0=-6.0 * units.sigma1 if self.x0 is None else self.x0,
            sigma0=units.sigma0 if self.sigma0 is None else self.sigma0,
            p0=units.p0 if self.p0 is None else self.p0,
            alpha=self.alpha,
        )


def non_gaussian_norm_factor(alpha: float) -> float:
    """Closed-form bracket ``1 + alpha^2 exp(-pi^2/16) sinh(pi^2/16)``."""
    q = math.pi**2 / 16.0
    return 1.0 + alpha**2 * math.exp(-q) * math.sinh(q)


def packet_profile(spec: PacketSpec, x: np.ndarray, units: UnitSystem) -> np.ndarray:
    """Analytic packet at ``x`` with its closed-form normalisation."""
    s = spec.resolved(units)
    u = x - s.x0
    envelope = np.exp(-u**2 / (4.0 * s.sigma0**2) + 1j * s.p0 * u / units.hbar)
    scale = (2.0 * math.pi * s.sigma0**2) ** -0.25
    if s.kind == "gaussian":
        return scale * envelope
    modulation = 1.0 + s.alpha * np.sin(math.pi * u / (4.0 * s.sigma0))
    return scale * modulation * envelope / math.sqrt(non_gaussian_norm_factor(s.alpha))


def build_packet(spec: PacketSpec, grid: SpatialGrid, units: UnitSystem) -> WaveState:
    """Sample the packet on ``grid`` at t = 0 and renormalise by quadrature.

    Raises
    ------
    ConfigurationError
        If the packet is not negligible at the hard walls.
    """
    psi = packet_profile(spec, grid.x, units)
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge >= WALL_TOLERANCE:
        raise ConfigurationError(f"packet amplitude {edge:.3g} at the box walls; widen the grid")
    psi[0] = psi[-1] = 0.0
    psi[np.abs(psi) < FLUSH] = 0.0
    psi /= math.sqrt(norm(WaveState(psi), grid))
    return WaveState(psi, 0.0)


def initial_energy(spec: PacketSpec, units: UnitSystem) -> float:
    """Mean energy ``p0^2/2m + hbar^2/(8 m sigma0^2)`` of a Gaussian packet."""
    if spec.kind != "gaussian":
        raise UnsupportedError("closed-form energy only exists for the Gaussian packet; "
                               "use observables.expectation_values")
    s = spec.resolved(units)
    return s.p0**2 / (2.0 * units.mass) + units.hbar**2 / (8.0 * units.mass * s.sigma0**2)
