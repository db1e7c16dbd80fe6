"""Mach scheduled aerodynamics, heating proxy and propulsion maps"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import xarray as xr
from numpy.typing import NDArray

from hypershield.atmosphere import (
    DEFAULT_ATMOSPHERE,
    FloatOrArray,
    StandardAtmosphere,
)
from hypershield.units import to_si

AERO_COLUMNS = ("CL0", "CLalpha", "CD0", "K", "CDalpha2")

# mach, CL0, CLalpha [1/rad], CD0, K, CDalpha2 [1/rad^2]
DEFAULT_AERO_ROWS = (
    (3.0, 0.0, 2.8, 0.030, 0.120, 0.80),
    (5.0, 0.0, 2.6, 0.035, 0.110, 0.85),
    (7.0, 0.0, 2.4, 0.040, 0.100, 0.90),
    (10.0, 0.0, 2.2, 0.050, 0.095, 0.95),
    (12.0, 0.0, 2.1, 0.055, 0.090, 1.00),
    (15.0, 0.0, 2.0, 0.065, 0.085, 1.05),
)

DEFAULT_ALTITUDES_KM = (20.0, 30.0, 40.0, 50.0, 60.0)
DEFAULT_MACHS = (3.0, 5.0, 7.0, 10.0, 12.0, 15.0)

DEFAULT_TMAX_KN = (
    (80.0, 120.0, 160.0, 140.0, 120.0, 80.0),
    (90.0, 140.0, 190.0, 170.0, 140.0, 90.0),
    (80.0, 130.0, 180.0, 160.0, 130.0, 80.0),
    (60.0, 100.0, 140.0, 120.0, 100.0, 60.0),
    (30.0, 60.0, 90.0, 75.0, 60.0, 30.0),
)

DEFAULT_ISP_S = (
    (900.0, 1100.0, 1400.0, 1500.0, 1450.0, 1200.0),
    (950.0, 1200.0, 1500.0, 1650.0, 1600.0, 1300.0),
    (900.0, 1150.0, 1450.0, 1600.0, 1550.0, 1250.0),
    (800.0, 1000.0, 1250.0, 1400.0, 1350.0, 1100.0),
    (650.0, 800.0, 1000.0, 1150.0, 1100.0, 900.0),
)


@dataclass(frozen=True)
class VehicleParams:
    """Geometric and thermal vehicle parameters."""

    S: float = 30.0
    k_heat: float = 1e-5
    alpha_min: float = float(np.deg2rad(-5.0))
    alpha_max: float = float(np.deg2rad(15.0))

    def __post_init__(self):
        if self.S <= 0 or self.k_heat <= 0:
            raise ValueError(
                f"Reference area and heating coefficient must be positive, "
                f"got S={self.S}, k_heat={self.k_heat}"
            )
        if self.alpha_min >= self.alpha_max:
            raise ValueError(
                f"alpha_min={self.alpha_min} must be below alpha_max={self.alpha_max}"
            )


@dataclass(frozen=True)
class AeroForces:
    """Lift and drag in N."""

    L: FloatOrArray
    D: FloatOrArray


def aero_table(rows=DEFAULT_AERO_ROWS) -> xr.Dataset:
    """Builds the aerodynamic coefficient schedule as a Dataset over `mach`."""
    data = np.asarray(rows, dtype=np.float64)
    if np.any(np.diff(data[:, 0]) <= 0):
        raise ValueError("The Mach grid of the aerodynamic table must strictly increase.")

    return xr.Dataset(
        {name: ("mach", data[:, i + 1]) for i, name in enumerate(AERO_COLUMNS)},
        coords={"mach": data[:, 0]},
    )


def propulsion_table(
    values, altitudes_km=DEFAULT_ALTITUDES_KM, machs=DEFAULT_MACHS, unit: str = ""
) -> xr.DataArray:
    """Builds a propulsion map over (altitude [m], mach) in SI units."""
    altitudes = np.array([to_si(h_km, "km") for h_km in altitudes_km])
    scale = to_si(1.0, unit) if unit else 1.0
    table = xr.DataArray(
        np.asarray(values, dtype=np.float64) * scale,
        dims=["altitude", "mach"],
        coords={"altitude": altitudes, "mach": np.asarray(machs, dtype=np.float64)},
    )
    if np.any(table.values <= 0):
        raise ValueError("All propulsion map entries must be positive.")
    return table


@dataclass(frozen=True, eq=False)
class PropulsionMaps:
    """Maximum thrust [N] and specific impulse [s] maps with the Mach gate."""

    tmax: xr.DataArray = field(
        default_factory=lambda: propulsion_table(DEFAULT_TMAX_KN, unit="kN")
    )
    isp: xr.DataArray = field(default_factory=lambda: propulsion_table(DEFAULT_ISP_S))
    M_gate: Tuple[float, float] = (4.0, 15.0)


@dataclass(frozen=True, eq=False)
class AeroPropulsion:
    """Aerodynamic schedule and propulsion maps of one vehicle."""

    params: VehicleParams = field(default_factory=VehicleParams)
    aero: xr.Dataset = field(default_factory=aero_table)
    propulsion: PropulsionMaps = field(default_factory=PropulsionMaps)
    atmosphere: StandardAtmosphere = DEFAULT_ATMOSPHERE
    g0: float = 9.80665

    def __post_init__(self):
        # plain arrays for the hot paths
        object.__setattr__(self, "_mach", self.aero["mach"].values)
        object.__setattr__(
            self, "_coeffs", {name: self.aero[name].values for name in AERO_COLUMNS}
        )

    def aero_coeffs(self, M: FloatOrArray, alpha: FloatOrArray):
        """Lift and drag coefficients from the Mach schedule and the drag polar.

        The Mach number is clamped to the tabulated range for the lookup.

        Returns:
            (FloatOrArray, FloatOrArray): CL and CD.
        """
        if np.any(np.asarray(alpha) < self.params.alpha_min) or np.any(
            np.asarray(alpha) > self.params.alpha_max
        ):
            raise ValueError(
                f"Angle of attack {alpha} outside "
                f"[{self.params.alpha_min}, {self.params.alpha_max}] rad"
            )
        M = np.clip(M, self._mach[0], self._mach[-1])
        CL0, CLalpha, CD0, K, CDalpha2 = (
            np.interp(M, self._mach, self._coeffs[name]) for name in AERO_COLUMNS
        )
        CL = CL0 + CLalpha * alpha
        CD = CD0 + K * CL**2 + CDalpha2 * alpha**2
        return CL, CD

    def aero_forces(self, h: FloatOrArray, V: FloatOrArray, alpha: FloatOrArray):
        """Lift and drag at altitude h, speed V and angle of attack alpha."""
        condition = self.atmosphere.flight_condition(h, V)
        CL, CD = self.aero_coeffs(condition.M, alpha)
        return AeroForces(
            L=condition.q * self.params.S * CL, D=condition.q * self.params.S * CD
        )

    def heating_rate(
        self, h: FloatOrArray, V: FloatOrArray, density: Optional[FloatOrArray] = None
    ):
        """Aerodynamic heating proxy k_heat·sqrt(rho)·V³ in model units.

        Args:
            density (FloatOrArray, optional): Overrides the atmospheric density.
        """
        if np.any(np.asarray(V) < 0):
            raise ValueError(f"Speed must be non-negative, got V={V}")
        rho = self.atmosphere(h).rho if density is None else density
        return self.params.k_heat * np.sqrt(np.maximum(rho, 0.0)) * V**3

    def available_thrust(self, h: FloatOrArray, M: FloatOrArray, delta: FloatOrArray):
        """Throttled thrust at a given Mach number, zero outside the Mach gate."""
        if np.any(np.asarray(delta) < 0) or np.any(np.asarray(delta) > 1):
            raise ValueError(f"Throttle must lie in [0, 1], got {delta}")
        M_min, M_max = self.propulsion.M_gate
        tmax = bilerp(self.propulsion.tmax, h, M)
        gated = (np.asarray(M) < M_min) | (np.asarray(M) > M_max)
        thrust = np.where(gated, 0.0, delta * tmax)
        return float(thrust) if np.ndim(thrust) == 0 else thrust

    def thrust(self, h: FloatOrArray, V: FloatOrArray, delta: FloatOrArray):
        """Throttled thrust at altitude h and speed V in N."""
        M = self.atmosphere.flight_condition(h, V).M
        return self.available_thrust(h, M, delta)

    def fuel_flow(self, T: FloatOrArray, h: FloatOrArray, M: FloatOrArray):
        """Fuel mass flow T/(Isp·g0) in kg/s, zero without thrust."""
        if np.any(np.asarray(T) < 0):
            raise ValueError(f"Thrust must be non-negative, got T={T}")
        isp = bilerp(self.propulsion.isp, h, M)
        flow = np.where(np.asarray(T) > 0, T / (isp * self.g0), 0.0)
        return float(flow) if np.ndim(flow) == 0 else flow

    def aero_grid(self, alphas: NDArray[np.float64], machs=None) -> xr.Dataset:
        """Samples CL and CD over a (mach, alpha) grid for contour plots."""
        if machs is None:
            machs = np.linspace(self._mach[0], self._mach[-1], 61)
        M, alpha = np.meshgrid(machs, alphas, indexing="ij")
        CL, CD = self.aero_coeffs(M, alpha)
        return xr.Dataset(
            {"CL": (("mach", "alpha"), CL), "CD": (("mach", "alpha"), CD)},
            coords={"mach": machs, "alpha": alphas},
        )

    def propulsion_grid(self, altitudes=None, machs=None) -> xr.Dataset:
        """Samples the interpolated Tmax and Isp maps over (altitude, mach)."""
        tmax = self.propulsion.tmax
        if altitudes is None:
            altitudes = np.linspace(*tmax["altitude"].values[[0, -1]], 41)
        if machs is None:
            machs = np.linspace(*tmax["mach"].values[[0, -1]], 61)
        h, M = np.meshgrid(altitudes, machs, indexing="ij")
        return xr.Dataset(
            {
                "tmax": (("altitude", "mach"), bilerp(tmax, h, M)),
                "isp": (("altitude", "mach"), bilerp(self.propulsion.isp, h, M)),
            },
            coords={"altitude": altitudes, "mach": machs},
        )


def _cell(axis: NDArray[np.float64], x: FloatOrArray):
    x = np.clip(x, axis[0], axis[-1])
    i = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, len(axis) - 2)
    return i, (x - axis[i]) / (axis[i + 1] - axis[i])


def bilerp(table: xr.DataArray, h: FloatOrArray, M: FloatOrArray):
    """Bilinear interpolation of a map over (altitude, mach).

    Queries outside the grid hull are clamped to its edges. The four cell
    weights sum to one and reproduce the table exactly at grid points.
    """
    values = table.values
    i, lam_h = _cell(table["altitude"].values, h)
    j, lam_M = _cell(table["mach"].values, M)
    result = (
        (1 - lam_h) * (1 - lam_M) * values[i, j]
        + lam_h * (1 - lam_M) * values[i + 1, j]
        + (1 - lam_h) * lam_M * values[i, j + 1]
        + lam_h * lam_M * values[i + 1, j + 1]
    )
    return float(result) if np.ndim(result) == 0 else result


def load_tables(fname: str) -> Tuple[xr.Dataset, PropulsionMaps]:
    """Reads aerodynamic and propulsion tables from a json file.

    The file has the keys `aero` and `propulsion`:

    .. code-block:: json

        {
          "aero": {"mach": [...], "CL0": [...], "CLalpha": [...], "CD0": [...],
                   "K": [...], "CDalpha2": [...]},
          "propulsion": {"altitude_km": [...], "mach": [...],
                         "tmax_kN": [[...], ...], "isp_s": [[...], ...]}
        }

    Missing sections keep the built-in tables.
    """
    with open(fname, encoding="utf-8") as json_file:
        tables: Dict[str, Any] = json.load(json_file)

    aero = aero_table()
    if "aero" in tables:
        section = tables["aero"]
        missing = [key for key in ("mach", *AERO_COLUMNS) if key not in section]
        if missing:
            raise ValueError(f"Aerodynamic table in {fname} misses columns {missing}")
        aero = aero_table(
            np.column_stack(
                [section["mach"], *(section[name] for name in AERO_COLUMNS)]
            )
        )

    maps = PropulsionMaps()
    if "propulsion" in tables:
        section = tables["propulsion"]
        maps = PropulsionMaps(
            tmax=propulsion_table(
                section["tmax_kN"], section["altitude_km"], section["mach"], unit="kN"
            ),
            isp=propulsion_table(
                section["isp_s"], section["altitude_km"], section["mach"]
            ),
        )

    return aero, maps
