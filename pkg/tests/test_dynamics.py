"""Tests for the equations of motion and the midpoint integrator"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hypershield.dynamics import (
    ControlInput,
    IntegrationError,
    IntegratorConfig,
    VehicleModel,
    VehicleState,
    derivatives,
    midpoint_step,
    rk2_step,
)

NOMINAL = VehicleState(35_000.0, 2_500.0, 0.0, 12_000.0)
CRUISE_INPUT = ControlInput(np.deg2rad(5.0), 0.5)


def test_level_flight_keeps_altitude_rate_zero():
    """gamma=0 gives no climb rate"""
    assert derivatives(NOMINAL, CRUISE_INPUT).h_dot == 0.0


def test_no_fuel_flow_without_thrust():
    """Below the Mach gate the engine delivers no thrust and burns no fuel"""
    slow = VehicleState(35_000.0, 1_000.0, 0.0, 12_000.0)
    assert derivatives(slow, CRUISE_INPUT).m_dot == 0.0


def test_rates_at_nominal_cruise():
    """Hand evaluated rates at the nominal cruise point with alpha=5 deg, half throttle"""
    rates = derivatives(NOMINAL, CRUISE_INPUT)
    assert rates.h_dot == 0.0
    assert_allclose(rates.V_dot, 3.864, rtol=1e-2)
    assert_allclose(rates.gamma_dot, 1.589e-3, rtol=2e-2)
    assert_allclose(rates.m_dot, -5.921, rtol=1e-2)


def test_derivatives_reject_non_finite_state():
    """Non-finite states are an input error"""
    with pytest.raises(ValueError):
        derivatives(VehicleState(np.nan, 2_500.0, 0.0, 12_000.0), CRUISE_INPUT)

def test_rates_stay_finite_near_zero_speed():
    """The flight path rate is bounded as V approaches zero"""
    for V in (1e-6, 0.0):
        rates = derivatives(VehicleState(35_000.0, V, 0.0, 12_000.0), CRUISE_INPUT)
        assert np.all(np.isfinite(rates))
        assert abs(rates.gamma_dot) < 10.0



def test_vectorized_rates_match_scalar_rates():
    """Stacked states give the same rates as single evaluations"""
    model = VehicleModel()
    states = [NOMINAL, VehicleState(30_000.0, 2_000.0, 0.05, 9_000.0)]
    stacked = np.stack([x.as_array() for x in states], axis=1)
    rates = model.rates(stacked, CRUISE_INPUT.alpha, CRUISE_INPUT.delta)
    for i, x in enumerate(states):
        assert_allclose(rates[:, i], model.derivatives(x, CRUISE_INPUT), rtol=1e-12)


def test_midpoint_step_is_exact_for_constant_rates():
    """A constant field is integrated exactly"""
    y = np.array([1.0, 2.0, 3.0, 4.0])
    c = np.array([0.5, -1.0, 0.25, 2.0])
    assert_allclose(midpoint_step(lambda _: c, y, 0.3), y + 0.3 * c)


def test_midpoint_step_on_linear_test_equation():
    """One step of x' = -x is the second order Taylor polynomial"""
    dt = 0.1
    assert_allclose(midpoint_step(lambda y: -y, 1.0, dt), 1 - dt + dt**2 / 2)


def test_midpoint_step_is_second_order():
    """Halving the step reduces the global error about four times"""

    def integrate(dt):
        y = 1.0
        for _ in range(round(1.0 / dt)):
            y = midpoint_step(lambda z: -z, y, dt)
        return y

    errors = [abs(integrate(dt) - np.exp(-1.0)) for dt in (0.1, 0.05)]
    order = np.log2(errors[0] / errors[1])
    assert 1.9 <= order <= 2.1


def test_rk2_step_from_nominal():
    """A step from nominal cruise stays finite and burns fuel"""
    x_next = rk2_step(NOMINAL, CRUISE_INPUT, 0.5)
    assert np.all(np.isfinite(x_next.as_array()))
    assert x_next.m < NOMINAL.m
    assert x_next.V > NOMINAL.V


def test_rk2_step_rejects_invalid_input():
    """Non-positive steps and non-finite states are input errors"""
    with pytest.raises(ValueError):
        rk2_step(NOMINAL, CRUISE_INPUT, 0.0)
    with pytest.raises(ValueError):
        rk2_step(VehicleState(35_000.0, np.inf, 0.0, 12_000.0), CRUISE_INPUT, 0.5)


def test_rk2_step_reports_non_finite_results():
    """A diverging step raises instead of returning a clamped state"""
    feather = VehicleState(35_000.0, 2_500.0, 0.0, 1e-300)
    with pytest.raises(IntegrationError):
        rk2_step(feather, CRUISE_INPUT, 0.5)


def test_mass_stops_at_the_floor():
    """Fuel flow ends at the dry mass while thrust keeps acting"""
    model = VehicleModel()
    x = VehicleState(35_000.0, 2_500.0, 0.0, model.m_floor + 0.5)
    x_next = model.rk2_step(x, ControlInput(CRUISE_INPUT.alpha, 1.0), 0.5)
    assert x_next.m == model.m_floor

    dry = model.rk2_step(x_next, ControlInput(CRUISE_INPUT.alpha, 1.0), 0.5)
    assert dry.m == model.m_floor
    assert model.derivatives(x_next, CRUISE_INPUT).V_dot > 0


def test_integrator_config_requires_positive_step():
    """The sampling period must be positive"""
    assert IntegratorConfig().dt == 0.5
    with pytest.raises(ValueError):
        IntegratorConfig(dt=-0.5)
