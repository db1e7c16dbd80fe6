"""Soft and hard flight constraints, the safety box and its distance"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from hypershield.atmosphere import FloatOrArray, gravity
from hypershield.dynamics import ControlInput, VehicleModel, VehicleState

N_CONSTRAINTS = 11
N_SOFT = 6
SOFT = slice(0, N_SOFT)
HARD = slice(N_SOFT, N_CONSTRAINTS)

CONSTRAINT_NAMES = (
    "h_min",
    "h_max",
    "V_min",
    "V_max",
    "gamma_min",
    "gamma_max",
    "q_max",
    "n_max",
    "Qdot_max",
    "M_max",
    "M_min",
)


@dataclass(frozen=True)
class SoftLimits:
    """Operational envelope on altitude [m], speed [m/s] and flight-path angle [rad]."""

    h_min: float = 19_000.0
    h_max: float = 51_000.0
    V_min: float = 900.0
    V_max: float = 4_100.0
    gamma_min: float = float(np.deg2rad(-10.0))
    gamma_max: float = float(np.deg2rad(10.0))

    def __post_init__(self):
        for lower, upper in (("h_min", "h_max"), ("V_min", "V_max"), ("gamma_min", "gamma_max")):
            if not getattr(self, lower) < getattr(self, upper):
                raise ValueError(
                    f"`{lower}`={getattr(self, lower)} must be below "
                    f"`{upper}`={getattr(self, upper)}"
                )


@dataclass(frozen=True)
class HardLimits:
    """Physical failure limits: dynamic pressure [Pa], load factor [g],
    heating proxy [model units] and the Mach envelope."""

    q_max: float = 80_000.0
    n_max: float = 5.0
    Qdot_max: float = 5.0e4
    M_min: float = 4.0
    M_max: float = 15.0

    def __post_init__(self):
        if min(self.q_max, self.n_max, self.Qdot_max, self.M_max) <= 0:
            raise ValueError(f"Hard limits must be positive, got {self}")
        if not self.M_min < self.M_max:
            raise ValueError(f"M_min={self.M_min} must be below M_max={self.M_max}")

    @classmethod
    def unbounded(cls) -> "HardLimits":
        """Limits that no finite state violates."""
        return cls(q_max=np.inf, n_max=np.inf, Qdot_max=np.inf, M_min=0.0, M_max=np.inf)


@dataclass(frozen=True)
class SafetyBox:
    """Closed box around the nominal cruise condition in (h, V, gamma)."""

    h_star: float = 35_000.0
    V_star: float = 2_500.0
    gamma_star: float = 0.0
    dh: float = 8_000.0
    dV: float = 800.0
    dgamma: float = float(np.deg2rad(5.0))

    def __post_init__(self):
        if min(self.dh, self.dV, self.dgamma) <= 0:
            raise ValueError(f"Safety box half-widths must be positive, got {self}")

    def offsets(self, h: FloatOrArray, V: FloatOrArray, gamma: FloatOrArray):
        """Offsets from the center normalized by the half-widths."""
        return (
            (h - self.h_star) / self.dh,
            (V - self.V_star) / self.dV,
            (gamma - self.gamma_star) / self.dgamma,
        )

    def contains(self, h: FloatOrArray, V: FloatOrArray, gamma: FloatOrArray):
        return (
            (np.abs(h - self.h_star) <= self.dh)
            & (np.abs(V - self.V_star) <= self.dV)
            & (np.abs(gamma - self.gamma_star) <= self.dgamma)
        )

    def distance(self, h: FloatOrArray, V: FloatOrArray, gamma: FloatOrArray):
        return np.sqrt(sum(offset**2 for offset in self.offsets(h, V, gamma)))


@dataclass(frozen=True)
class ViolationVector:
    """Violation flags ordered c1..c11 (soft c1..c6, hard c7..c11)."""

    flags: NDArray[np.bool_]

    @property
    def soft_any(self):
        return np.any(self.flags[SOFT], axis=0)

    @property
    def hard_any(self):
        return np.any(self.flags[HARD], axis=0)

    def as_dict(self):
        return {
            f"v{j + 1}_{name}": bool(flag)
            for j, (name, flag) in enumerate(zip(CONSTRAINT_NAMES, self.flags))
        }


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """The eleven constraint functions of one vehicle model."""

    model: VehicleModel = field(default_factory=VehicleModel)
    soft: SoftLimits = field(default_factory=SoftLimits)
    hard: HardLimits = field(default_factory=HardLimits)

    def load_factor(
        self, h: FloatOrArray, V: FloatOrArray, alpha: FloatOrArray, m: FloatOrArray
    ):
        """Normal load factor L/(m·g(h)) induced by the angle of attack."""
        if np.any(np.asarray(m) <= 0):
            raise ValueError(f"Mass must be positive, got m={m}")
        lift = self.model.vehicle.aero_forces(h, V, alpha).L
        return lift / (m * gravity(h, self.model.gravity))

    def values(self, y: NDArray[np.float64], alpha: FloatOrArray) -> NDArray[np.float64]:
        """Constraint function values c1..c11 of stacked states y (4, ...).

        A constraint is satisfied when its value is non-positive.
        """
        h, V, gamma, m = y
        soft, hard = self.soft, self.hard
        vehicle = self.model.vehicle
        condition = vehicle.atmosphere.flight_condition(h, V)
        n = self.load_factor(h, V, alpha, m)
        heating = vehicle.heating_rate(h, V)

        return np.stack(
            np.broadcast_arrays(
                soft.h_min - h,
                h - soft.h_max,
                soft.V_min - V,
                V - soft.V_max,
                soft.gamma_min - gamma,
                gamma - soft.gamma_max,
                condition.q - hard.q_max,
                np.abs(n) - hard.n_max,
                heating - hard.Qdot_max,
                condition.M - hard.M_max,
                hard.M_min - condition.M,
            )
        )

    def hard_safe(self, y: NDArray[np.float64], alpha: FloatOrArray):
        """True where all hard constraints hold (boundary counts as satisfied)."""
        return np.all(self.values(y, alpha)[HARD] <= 0, axis=0)

    def soft_safe(self, y: NDArray[np.float64]):
        """True where all soft constraints hold."""
        h, V, gamma, _ = y
        soft = self.soft
        return (
            (soft.h_min <= h)
            & (h <= soft.h_max)
            & (soft.V_min <= V)
            & (V <= soft.V_max)
            & (soft.gamma_min <= gamma)
            & (gamma <= soft.gamma_max)
        )

    def evaluate(self, x: VehicleState, u: ControlInput) -> ViolationVector:
        """Violation flags v_j = 1{c_j > 0} at state x under control u."""
        return ViolationVector(flags=self.values(x.as_array(), u.alpha) > 0)


def in_safety_box(x: VehicleState, box: SafetyBox) -> bool:
    """Whether x lies in the closed safety box."""
    return bool(box.contains(x.h, x.V, x.gamma))


def box_distance(x: VehicleState, box: SafetyBox) -> float:
    """Euclidean norm of the normalized offsets of x from the box center."""
    return float(box.distance(x.h, x.V, x.gamma))
