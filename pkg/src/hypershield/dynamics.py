"""Longitudinal equations of motion and their midpoint discretization"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from hypershield.aero_propulsion import AeroPropulsion
from hypershield.atmosphere import FloatOrArray, GravityConstants, gravity


class IntegrationError(ArithmeticError):
    """Raised when an integration step produces a non-finite state."""


@dataclass(frozen=True)
class VehicleState:
    """Continuous state: altitude [m], speed [m/s], flight-path angle [rad], mass [kg]."""

    h: float
    V: float
    gamma: float
    m: float

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.h, self.V, self.gamma, self.m], dtype=np.float64)

    @classmethod
    def from_array(cls, y: NDArray[np.float64]) -> "VehicleState":
        return cls(*(float(value) for value in y))


@dataclass(frozen=True)
class ControlInput:
    """Angle of attack [rad] and throttle in [0, 1]."""

    alpha: float
    delta: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Sampling period of the discretized dynamics."""

    dt: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"The sampling period must be positive, got dt={self.dt}")


class StateRate(NamedTuple):
    """Time derivative of a VehicleState."""

    h_dot: FloatOrArray
    V_dot: FloatOrArray
    gamma_dot: FloatOrArray
    m_dot: FloatOrArray


@dataclass(frozen=True, eq=False)
class VehicleModel:
    """Everything the equations of motion need besides state and control."""

    vehicle: AeroPropulsion = field(default_factory=AeroPropulsion)
    gravity: GravityConstants = field(default_factory=GravityConstants)
    m_floor: float = 6_000.0

    def rates(
        self,
        y: NDArray[np.float64],
        alpha: FloatOrArray,
        delta: FloatOrArray,
        check: bool = True,
    ) -> NDArray[np.float64]:
        """Evaluates the equations of motion on a stacked state array.

        Args:
            y (NDArray[np.float64]): States of shape (4, ...) ordered (h, V, gamma, m).
            alpha (FloatOrArray): Angle of attack in rad, broadcastable to y[0].
            delta (FloatOrArray): Throttle, broadcastable to y[0].
            check (bool, optional):
                Raise on non-finite states. When False non-finite entries
                propagate into the result instead. Defaults to True.

        Returns:
            NDArray[np.float64]: The rates with the same shape as y.
        """
        if check and not np.all(np.isfinite(y)):
            raise ValueError(f"State must be finite, got {y}")

        h, V, gamma, m = y
        speed = np.maximum(V, 0.0)
        if not check:
            h = np.where(np.isfinite(h), h, 0.0)
            speed = np.where(np.isfinite(speed), speed, 0.0)

        condition = self.vehicle.atmosphere.flight_condition(h, speed)
        CL, CD = self.vehicle.aero_coeffs(condition.M, alpha)
        lift = condition.q * self.vehicle.params.S * CL
        drag = condition.q * self.vehicle.params.S * CD

        thrust = self.vehicle.available_thrust(h, condition.M, delta)
        fuel = self.vehicle.fuel_flow(thrust, h, condition.M)
        fuel = np.where(m > self.m_floor, fuel, 0.0)

        weight = m * gravity(h, self.gravity)
        h_dot = V * np.sin(gamma)
        V_dot = (thrust * np.cos(alpha) - drag - weight * np.sin(gamma)) / m
        gamma_dot = (lift + thrust * np.sin(alpha) - weight * np.cos(gamma)) / (
            m * np.maximum(V, 1.0)
        )
        m_dot = -fuel * np.ones_like(h_dot)

        return np.stack(np.broadcast_arrays(h_dot, V_dot, gamma_dot, m_dot))

    def derivatives(self, x: VehicleState, u: ControlInput) -> StateRate:
        """Time derivative of the state x under the control u."""
        rates = self.rates(x.as_array(), u.alpha, u.delta)
        return StateRate(*(float(rate) for rate in rates))

    def step_array(
        self,
        y: NDArray[np.float64],
        alpha: FloatOrArray,
        delta: FloatOrArray,
        dt: float,
        check: bool = True,
    ) -> NDArray[np.float64]:
        """One midpoint step of stacked states, control held over the step."""
        y_next = midpoint_step(lambda z: self.rates(z, alpha, delta, check), y, dt)
        # fuel flow stops at the dry mass floor
        y_next[3] = np.maximum(y_next[3], np.minimum(y[3], self.m_floor))
        return y_next

    def rk2_step(self, x: VehicleState, u: ControlInput, dt: float) -> VehicleState:
        """Advances x by one sampling period dt with the control u held constant.

        Raises:
            IntegrationError: If the step produces a non-finite state.
        """
        if not dt > 0:
            raise ValueError(f"The sampling period must be positive, got dt={dt}")
        y = x.as_array()
        if not np.all(np.isfinite(y)):
            raise ValueError(f"State must be finite, got {x}")
        y_next = self.step_array(y, u.alpha, u.delta, dt, check=False)
        if not np.all(np.isfinite(y_next)):
            raise IntegrationError(f"Non-finite state {y_next} after a step from {x}")
        return VehicleState.from_array(y_next)


def midpoint_step(
    rate: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    y: NDArray[np.float64],
    dt: float,
) -> NDArray[np.float64]:
    """Explicit second order Runge-Kutta (midpoint) step of y' = rate(y)."""
    k1 = rate(y)
    y_half = y + 0.5 * dt * k1
    k2 = rate(y_half)
    return y + dt * k2


DEFAULT_MODEL = VehicleModel()


def derivatives(x: VehicleState, u: ControlInput, model: VehicleModel = DEFAULT_MODEL):
    """Time derivative of x under u for the given (default) vehicle model."""
    return model.derivatives(x, u)


def rk2_step(
    x: VehicleState, u: ControlInput, dt: float, model: VehicleModel = DEFAULT_MODEL
) -> VehicleState:
    """One midpoint step of the given (default) vehicle model."""
    return model.rk2_step(x, u, dt)
