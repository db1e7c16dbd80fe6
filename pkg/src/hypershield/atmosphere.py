"""Altitude dependent gravity and the piecewise standard atmosphere"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

FloatOrArray = Union[float, NDArray[np.float64]]

# (base altitude m, lapse rate K/m) of the seven layers below 86 km
STANDARD_LAYERS: Tuple[Tuple[float, float], ...] = (
    (0.0, -6.5e-3),
    (11_000.0, 0.0),
    (20_000.0, 1.0e-3),
    (32_000.0, 2.8e-3),
    (47_000.0, 0.0),
    (51_000.0, -2.8e-3),
    (71_000.0, -2.0e-3),
)


@dataclass(frozen=True)
class GravityConstants:
    """Constants of the inverse square gravity model."""

    g0: float = 9.80665
    RE: float = 6.371e6

    def __post_init__(self):
        if self.g0 <= 0 or self.RE <= 0:
            raise ValueError(
                f"Gravity constants must be positive, got g0={self.g0}, RE={self.RE}"
            )


@dataclass(frozen=True)
class AtmosphereLayer:
    """Base values of one atmospheric layer."""

    h_b: float
    T_b: float
    p_b: float
    L_b: float


@dataclass(frozen=True)
class AtmosphereConstants:
    """Gas properties and the altitude range of the atmosphere model."""

    R_air: float = 287.05287
    gamma_air: float = 1.4
    h_clamp: Tuple[float, float] = (0.0, 86_000.0)
    T0: float = 288.15
    p0: float = 101_325.0


@dataclass(frozen=True)
class AtmosphereSample:
    """Temperature, pressure, density and speed of sound at one altitude."""

    T: FloatOrArray
    p: FloatOrArray
    rho: FloatOrArray
    a: FloatOrArray


@dataclass(frozen=True)
class FlightCondition:
    """Mach number and dynamic pressure."""

    M: FloatOrArray
    q: FloatOrArray


def _check_finite(name: str, value: FloatOrArray):
    if not np.all(np.isfinite(value)):
        raise ValueError(f"`{name}` must be finite, got {value}")


def gravity(h: FloatOrArray, constants: Optional[GravityConstants] = None):
    """Gravitational acceleration at altitude h (negative altitudes use h=0).

    Args:
        h (FloatOrArray): Altitude in m.
        constants (GravityConstants, optional): Defaults to the standard values.

    Returns:
        FloatOrArray: The acceleration in m/s².
    """
    if constants is None:
        constants = DEFAULT_GRAVITY
    _check_finite("h", h)
    ratio = constants.RE / (constants.RE + np.maximum(0.0, h))
    return constants.g0 * ratio**2


@dataclass(frozen=True)
class StandardAtmosphere:
    """Piecewise standard atmosphere.

    The base pressure of every layer above the first is computed from the
    pressure formula of the layer below, so pressure is continuous across
    all layer boundaries.
    """

    constants: AtmosphereConstants = field(default_factory=AtmosphereConstants)
    g0: float = 9.80665
    base_layers: Tuple[Tuple[float, float], ...] = STANDARD_LAYERS
    layers: List[AtmosphereLayer] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bases = [h_b for h_b, _ in self.base_layers]
        if any(upper <= lower for lower, upper in zip(bases, bases[1:])):
            raise ValueError(f"Layer bases must strictly increase, got {bases}")

        layers = []
        h_b, lapse = self.base_layers[0]
        layer = AtmosphereLayer(h_b, self.constants.T0, self.constants.p0, lapse)
        layers.append(layer)
        for h_next, lapse_next in self.base_layers[1:]:
            T_next = layer.T_b + layer.L_b * (h_next - layer.h_b)
            p_next = float(
                self._pressure(layer.h_b, layer.T_b, layer.p_b, layer.L_b, h_next, T_next)
            )
            layer = AtmosphereLayer(h_next, T_next, p_next, lapse_next)
            layers.append(layer)

        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "_h_b", np.array([lay.h_b for lay in layers]))
        object.__setattr__(self, "_T_b", np.array([lay.T_b for lay in layers]))
        object.__setattr__(self, "_p_b", np.array([lay.p_b for lay in layers]))
        object.__setattr__(self, "_L_b", np.array([lay.L_b for lay in layers]))

    def _pressure(self, h_b, T_b, p_b, L_b, h, T):
        """Pressure at h inside the layer with the given base values."""
        R_air = self.constants.R_air
        isothermal = L_b == 0
        safe_lapse = np.where(isothermal, 1.0, L_b)
        p_gradient = p_b * (T / T_b) ** (-self.g0 / (R_air * safe_lapse))
        p_isothermal = p_b * np.exp(-self.g0 * (h - h_b) / (R_air * T_b))
        return np.where(isothermal, p_isothermal, p_gradient)

    def layer_index(self, h: FloatOrArray):
        """Index of the layer containing the (clamped) altitude h."""
        h_clamped = np.clip(h, *self.constants.h_clamp)
        return np.searchsorted(self._h_b, h_clamped, side="right") - 1

    def __call__(self, h: FloatOrArray) -> AtmosphereSample:
        _check_finite("h", h)
        R_air = self.constants.R_air
        h = np.clip(h, *self.constants.h_clamp)
        idx = self.layer_index(h)

        h_b, T_b, p_b, L_b = self._h_b[idx], self._T_b[idx], self._p_b[idx], self._L_b[idx]
        T = T_b + L_b * (h - h_b)
        p = self._pressure(h_b, T_b, p_b, L_b, h, T)

        rho = p / (R_air * T)
        a = np.sqrt(self.constants.gamma_air * R_air * T)
        if np.ndim(T) == 0:
            return AtmosphereSample(float(T), float(p), float(rho), float(a))
        return AtmosphereSample(T, p, rho, a)

    def flight_condition(self, h: FloatOrArray, V: FloatOrArray) -> FlightCondition:
        """Mach number and dynamic pressure at altitude h and speed V."""
        if np.any(np.asarray(V) < 0):
            raise ValueError(f"Speed must be non-negative, got V={V}")
        sample = self(h)
        return FlightCondition(M=V / sample.a, q=0.5 * sample.rho * V**2)


DEFAULT_GRAVITY = GravityConstants()
DEFAULT_ATMOSPHERE = StandardAtmosphere()


def atmosphere(h: FloatOrArray) -> AtmosphereSample:
    """Evaluates the default standard atmosphere at altitude h (m)."""
    return DEFAULT_ATMOSPHERE(h)


def flight_condition(h: FloatOrArray, V: FloatOrArray) -> FlightCondition:
    """Mach number and dynamic pressure for the default standard atmosphere."""
    return DEFAULT_ATMOSPHERE.flight_condition(h, V)
