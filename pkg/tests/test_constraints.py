"""Tests for the flight constraints and the safety box"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from hypershield.constraints import (
    CONSTRAINT_NAMES,
    N_CONSTRAINTS,
    ConstraintSet,
    HardLimits,
    SafetyBox,
    SoftLimits,
    box_distance,
    in_safety_box,
)
from hypershield.dynamics import ControlInput, VehicleState
from hypershield.viability import ActionGrid

CONSTRAINTS = ConstraintSet()
BOX = SafetyBox()
NOMINAL = VehicleState(35_000.0, 2_500.0, 0.0, 12_000.0)
CRUISE_INPUT = ControlInput(np.deg2rad(5.0), 0.5)


def state_at_mach(M: float, h: float = 35_000.0) -> VehicleState:
    a = CONSTRAINTS.model.vehicle.atmosphere(h).a
    return VehicleState(h, M * a, 0.0, 12_000.0)


def test_constraint_order():
    """Soft constraints come first, hard constraints last"""
    assert len(CONSTRAINT_NAMES) == N_CONSTRAINTS == 11
    assert CONSTRAINT_NAMES[:6] == ("h_min", "h_max", "V_min", "V_max", "gamma_min", "gamma_max")
    assert CONSTRAINT_NAMES[6:] == ("q_max", "n_max", "Qdot_max", "M_max", "M_min")


def test_load_factor_definition():
    """The load factor is lift over weight"""
    n = CONSTRAINTS.load_factor(NOMINAL.h, NOMINAL.V, CRUISE_INPUT.alpha, NOMINAL.m)
    lift = CONSTRAINTS.model.vehicle.aero_forces(NOMINAL.h, NOMINAL.V, CRUISE_INPUT.alpha).L
    assert_allclose(n, lift / (NOMINAL.m * 9.6998), rtol=1e-4)
    assert_allclose(n, 1.34, rtol=2e-2)


def test_load_factor_vanishes_at_rest():
    """No speed means no lift"""
    assert CONSTRAINTS.load_factor(35_000.0, 0.0, 0.1, 12_000.0) == 0.0


def test_load_factor_is_one_when_lift_balances_weight():
    """Lift equal to weight gives n=1"""
    vehicle = CONSTRAINTS.model.vehicle
    m = vehicle.aero_forces(NOMINAL.h, NOMINAL.V, 0.1).L / 9.69978
    assert_allclose(CONSTRAINTS.load_factor(NOMINAL.h, NOMINAL.V, 0.1, m), 1.0, rtol=1e-5)


def test_load_factor_rejects_non_positive_mass():
    """Mass must be positive"""
    with pytest.raises(ValueError):
        CONSTRAINTS.load_factor(35_000.0, 2_500.0, 0.1, 0.0)


def test_nominal_cruise_is_hard_safe():
    """No hard flag at the nominal cruise state"""
    violations = CONSTRAINTS.evaluate(NOMINAL, CRUISE_INPUT)
    assert not violations.hard_any
    assert not violations.soft_any


def test_mach_envelope_flags():
    """M=16 violates the upper and M=3 the lower Mach limit"""
    fast = CONSTRAINTS.evaluate(state_at_mach(16.0), CRUISE_INPUT).as_dict()
    slow = CONSTRAINTS.evaluate(state_at_mach(3.0), CRUISE_INPUT).as_dict()
    assert fast["v10_M_max"] and not fast["v11_M_min"]
    assert slow["v11_M_min"] and not slow["v10_M_max"]


def test_boundary_counts_as_satisfied():
    """A constraint value of exactly zero is not a violation"""
    exact = ConstraintSet(soft=SoftLimits(h_max=NOMINAL.h))
    assert not exact.evaluate(NOMINAL, CRUISE_INPUT).as_dict()["v2_h_max"]
    above = ConstraintSet(soft=SoftLimits(h_max=NOMINAL.h - 1.0))
    assert above.evaluate(NOMINAL, CRUISE_INPUT).as_dict()["v2_h_max"]


def test_dynamic_pressure_limit():
    """Low and fast flight exceeds the dynamic pressure limit"""
    dense = VehicleState(20_000.0, 2_500.0, 0.0, 12_000.0)
    flags = CONSTRAINTS.evaluate(dense, ControlInput(np.deg2rad(3.0), 0.5)).as_dict()
    assert flags["v7_q_max"]


def test_load_limit_depends_on_angle_of_attack():
    """The same state is load safe at small and unsafe at large incidence"""
    y = VehicleState(29_000.0, 2_500.0, 0.0, 7_500.0).as_array()
    assert CONSTRAINTS.hard_safe(y, np.deg2rad(3.0))
    assert not CONSTRAINTS.hard_safe(y, np.deg2rad(15.0))

def test_only_the_load_limit_depends_on_the_action():
    """Across all actions only c8 changes"""
    values = CONSTRAINTS.values(NOMINAL.as_array(), ActionGrid().alphas())
    assert values.shape == (N_CONSTRAINTS, 20)
    varying = np.flatnonzero(np.ptp(values, axis=1) > 0)
    assert_array_equal(varying, [7])



def test_unbounded_limits_are_never_violated():
    """Infinite hard limits admit every finite state"""
    relaxed = ConstraintSet(hard=HardLimits.unbounded())
    y = np.array([[20_000.0, 50_000.0], [4_000.0, 900.0], [0.1, -0.1], [9_000.0, 7_000.0]])
    assert np.all(relaxed.hard_safe(y, np.deg2rad(15.0)))


def test_soft_safe_classification():
    """Soft safety only looks at altitude, speed and flight-path angle"""
    y = np.array([[35_000.0, 60_000.0], [2_500.0, 2_500.0], [0.0, 0.0], [12_000.0, 12_000.0]])
    assert_array_equal(CONSTRAINTS.soft_safe(y), [True, False])


def test_invalid_limits_are_rejected():
    """Inconsistent limits raise"""
    with pytest.raises(ValueError):
        SoftLimits(h_min=60_000.0)
    with pytest.raises(ValueError):
        HardLimits(M_min=16.0)
    with pytest.raises(ValueError):
        SafetyBox(dh=0.0)


def test_safety_box_membership():
    """The safety box is closed"""
    assert in_safety_box(NOMINAL, BOX)
    on_face = VehicleState(BOX.h_star + BOX.dh, BOX.V_star, 0.0, 12_000.0)
    assert in_safety_box(on_face, BOX)
    outside = VehicleState(BOX.h_star + BOX.dh + 1.0, BOX.V_star, 0.0, 12_000.0)
    assert not in_safety_box(outside, BOX)


def test_box_distance():
    """Normalized distance from the box center"""
    assert box_distance(NOMINAL, BOX) == 0.0
    one = VehicleState(BOX.h_star + BOX.dh, BOX.V_star, BOX.gamma_star, 12_000.0)
    assert_allclose(box_distance(one, BOX), 1.0)
    corner = VehicleState(
        BOX.h_star + BOX.dh, BOX.V_star + BOX.dV, BOX.gamma_star + BOX.dgamma, 12_000.0
    )
    assert_allclose(box_distance(corner, BOX), np.sqrt(3.0))

