"""Tests for gravity and the standard atmosphere"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_almost_equal

from hypershield.atmosphere import (
    DEFAULT_ATMOSPHERE,
    GravityConstants,
    atmosphere,
    flight_condition,
    gravity,
)


def test_gravity_at_sea_level():
    """Gravity equals g0 at sea level and below"""
    assert gravity(0.0) == 9.80665
    assert gravity(-100.0) == 9.80665


def test_gravity_at_cruise_altitude():
    """Inverse square law at 35 km"""
    assert_almost_equal(gravity(35_000.0), 9.6998, decimal=4)


def test_gravity_decreases_with_altitude():
    """Gravity never increases with altitude"""
    altitudes = np.linspace(-1_000.0, 90_000.0, 500)
    assert np.all(np.diff(gravity(altitudes)) <= 0)


def test_gravity_rejects_non_finite_altitude():
    """Non-finite altitudes are an input error"""
    with pytest.raises(ValueError):
        gravity(np.nan)


def test_gravity_constants_must_be_positive():
    """Invalid gravity constants are rejected"""
    with pytest.raises(ValueError):
        GravityConstants(g0=-1.0)


def test_sea_level_atmosphere():
    """Sea level values within 0.1 %"""
    sample = atmosphere(0.0)
    assert_allclose(sample.T, 288.15, rtol=1e-3)
    assert_allclose(sample.p, 101_325.0, rtol=1e-3)
    assert_allclose(sample.rho, 1.225, rtol=1e-3)
    assert_allclose(sample.a, 340.3, rtol=1e-3)


def test_tropopause_temperature():
    """Temperature at the tropopause base"""
    assert_almost_equal(atmosphere(11_000.0).T, 216.65, decimal=6)


def test_cruise_altitude_atmosphere():
    """Temperature, density and speed of sound at 35 km"""
    sample = atmosphere(35_000.0)
    assert_allclose(sample.T, 237.05, rtol=1e-6)
    assert_allclose(sample.rho, 8.21e-3, rtol=5e-3)
    assert_allclose(sample.a, 308.6, rtol=1e-3)


@pytest.mark.parametrize("layer", DEFAULT_ATMOSPHERE.layers[1:])
def test_pressure_is_continuous_at_layer_bases(layer):
    """Pressure on both sides of a layer base agrees to 1e-9"""
    below = atmosphere(np.nextafter(layer.h_b, -np.inf))
    above = atmosphere(layer.h_b)
    assert abs(below.p - above.p) / above.p < 1e-9
    assert abs(below.T - above.T) < 1e-6

def test_pressure_and_density_decrease_with_altitude():
    """Both fall strictly on a one meter grid up to 86 km"""
    sample = atmosphere(np.arange(0.0, 86_000.0, 1.0))
    assert np.all(np.diff(sample.p) < 0)
    assert np.all(np.diff(sample.rho) < 0)



def test_altitudes_are_clamped():
    """Altitudes outside the table are clamped to its ends"""
    assert atmosphere(-500.0) == atmosphere(0.0)
    assert atmosphere(95_000.0) == atmosphere(86_000.0)


def test_vectorized_atmosphere():
    """Array input gives the same values as scalar input"""
    altitudes = np.array([0.0, 11_000.0, 35_000.0, 60_000.0])
    sample = atmosphere(altitudes)
    for i, h in enumerate(altitudes):
        assert_allclose(sample.rho[i], atmosphere(h).rho, rtol=1e-12)


def test_flight_condition_at_rest():
    """Zero speed gives zero Mach and dynamic pressure"""
    condition = flight_condition(0.0, 0.0)
    assert condition.M == 0.0
    assert condition.q == 0.0


def test_flight_condition_mach_one():
    """The sea level speed of sound is Mach 1"""
    assert_allclose(flight_condition(0.0, 340.29).M, 1.0, rtol=1e-3)


def test_flight_condition_at_nominal_cruise():
    """Mach number and dynamic pressure at the nominal cruise point"""
    condition = flight_condition(35_000.0, 2_500.0)
    assert_allclose(condition.M, 8.10, rtol=2e-3)
    assert_allclose(condition.q, 2.57e4, rtol=5e-3)


def test_flight_condition_rejects_negative_speed():
    """Negative speed is an input error"""
    with pytest.raises(ValueError):
        flight_condition(10_000.0, -1.0)
