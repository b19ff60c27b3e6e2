import math

import numpy as np
import pytest
from scipy.integrate import quad

from superarrivals.errors import ConfigurationError, InvalidParameterError, UnsupportedError
from superarrivals.grid import SpatialGrid, default_grid, norm, partial_norm
from superarrivals.observables import expectation_values
from superarrivals.wavepackets import (PacketSpec, build_packet, initial_energy,
                                       non_gaussian_norm_factor, packet_profile)


def test_defaults_resolve_from_units(units):
    spec = PacketSpec().resolved(units)
    assert spec.x0 == pytest.approx(-6 * units.sigma1)
    assert spec.sigma0 == units.sigma0
    assert spec.p0 == units.p0


def test_gaussian_norm_and_peak(units):
    # x0 = -0.3 sits exactly on a node of this grid
    grid = SpatialGrid(-1.3, 0.7, 2001)
    spec = PacketSpec().resolved(units)
    psi = build_packet(spec, grid, units)
    assert psi.time == 0.0
    assert norm(psi, grid) == pytest.approx(1.0, abs=1e-9)
    peak = psi.density()[1000]
    assert peak == pytest.approx(1.0 / math.sqrt(2 * math.pi * units.sigma0**2), rel=1e-9)


def test_walls_are_pinned(small_grid, gaussian, units):
    psi = build_packet(gaussian, small_grid, units).amplitudes
    assert psi[0] == 0 and psi[-1] == 0


def test_non_gaussian_alpha_zero_reduces_to_gaussian(small_grid, units):
    g = build_packet(PacketSpec(), small_grid, units).amplitudes
    ng = build_packet(PacketSpec(kind="non_gaussian", alpha=0.0), small_grid, units).amplitudes
    np.testing.assert_allclose(ng, g, rtol=0, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, -1.3, 2.0])
def test_non_gaussian_closed_form_normalisation_matches_quadrature(alpha, units):
    spec = PacketSpec(kind="non_gaussian", alpha=alpha).resolved(units)
    s0 = spec.sigma0

    def density(x):
        return abs(packet_profile(spec, np.array([x]), units)[0]) ** 2

    total, _ = quad(density, spec.x0 - 20 * s0, spec.x0 + 20 * s0, limit=400, epsabs=1e-13)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_non_gaussian_built_norm(small_grid, units):
    psi = build_packet(PacketSpec(kind="non_gaussian", alpha=0.5), small_grid, units)
    assert norm(psi, small_grid) == pytest.approx(1.0, abs=1e-8)


def test_norm_factor_closed_form():
    q = math.pi**2 / 16
    assert non_gaussian_norm_factor(0.0) == 1.0
    assert non_gaussian_norm_factor(1.0) == pytest.approx(1 + math.exp(-q) * math.sinh(q), rel=1e-15)


def test_negligible_overlap_with_barrier_region(units):
    grid = default_grid(units, 16384)
    psi = build_packet(PacketSpec(), grid, units)
    assert partial_norm(psi, grid, 0.0) < 1e-6


def test_packet_touching_walls_is_rejected(units):
    grid = SpatialGrid(-0.35, 0.35, 1001)
    with pytest.raises(ConfigurationError):
        build_packet(PacketSpec(), grid, units)


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        PacketSpec(kind="lorentzian")
    with pytest.raises(InvalidParameterError):
        PacketSpec(sigma0=0.0)
    with pytest.raises(InvalidParameterError):
        PacketSpec(kind="non_gaussian", alpha=math.inf)


def test_initial_energy(units):
    assert initial_energy(PacketSpec(), units) == pytest.approx(24874.011002723397, rel=1e-13)
    zero = initial_energy(PacketSpec(p0=0.0), units)
    assert zero == pytest.approx(1.0 / (8 * units.mass * units.sigma0**2), rel=1e-15)
    wide = initial_energy(PacketSpec(sigma0=1e6), units)
    assert wide == pytest.approx(units.p0**2 / (2 * units.mass), rel=1e-12)
    with pytest.raises(UnsupportedError):
        initial_energy(PacketSpec(kind="non_gaussian", alpha=0.3), units)


def test_position_and_momentum_expectations(small_grid, gaussian, units):
    psi = build_packet(gaussian, small_grid, units)
    e = expectation_values(psi, small_grid, units)
    assert e.position == pytest.approx(gaussian.x0, abs=1e-8)
    # central differences see sin(p0 dx)/dx, damped by the envelope autocorrelation
    dx = small_grid.dx
    discrete = math.sin(gaussian.p0 * dx) / dx * math.exp(-dx**2 / (8 * gaussian.sigma0**2))
    assert e.momentum == pytest.approx(discrete, rel=1e-6)
    assert e.momentum == pytest.approx(gaussian.p0, rel=(gaussian.p0 * dx) ** 2 / 6 * 1.05)


def test_energy_expectation_close_to_closed_form(small_grid, gaussian, units):
    psi = build_packet(gaussian, small_grid, units)
    e = expectation_values(psi, small_grid, units)
    dx = small_grid.dx
    assert e.energy == pytest.approx(initial_energy(gaussian, units), rel=(gaussian.p0 * dx) ** 2 / 6)
