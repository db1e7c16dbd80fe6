"""Experiment configuration as flat dotted key/value json"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Dict, Mapping

from hypershield.abstraction import GridSpec
from hypershield.aero_propulsion import AeroPropulsion, VehicleParams, load_tables
from hypershield.constraints import ConstraintSet, HardLimits, SafetyBox, SoftLimits
from hypershield.dynamics import IntegratorConfig, VehicleModel, VehicleState
from hypershield.qlearning import LearnerConfig
from hypershield.rewards import RewardConfig
from hypershield.shield import Shield
from hypershield.units import to_si
from hypershield.viability import (
    ActionGrid,
    TransitionTable,
    ViabilityResult,
    build_transitions,
    compute_feasible_set,
)

# Sections of the flat key space which determine the viability result
VIABILITY_SECTIONS = (
    "grid",
    "hard",
    "hard_margin",
    "vehicle",
    "integrator",
    "m_floor",
    "tables",
)


class ConfigurationError(ValueError):
    """Raised for unknown keys or values that do not fit their setting."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Every setting of an experiment. The defaults reproduce the nominal cruise study."""

    grid: GridSpec = field(default_factory=GridSpec)
    soft: SoftLimits = field(default_factory=SoftLimits)
    hard: HardLimits = field(default_factory=HardLimits)
    box: SafetyBox = field(default_factory=SafetyBox)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    nominal: VehicleState = field(
        default_factory=lambda: VehicleState(35_000.0, 2_500.0, 0.0, 12_000.0)
    )
    m_floor: float = 6_000.0
    hard_margin: float = 1.0
    tables: str = ""
    online_check: bool = False
    shielding: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.hard_margin >= 0:
            raise ValueError(
                f"`hard_margin` must be non-negative, got {self.hard_margin}"
            )

    def to_flat_dict(self) -> Dict[str, Any]:
        return flatten(asdict(self))

    def fingerprint(self) -> str:
        """SHA-256 of the canonical json of all settings."""
        return _digest(self.to_flat_dict())

    def viability_fingerprint(self) -> str:
        """SHA-256 of the settings which influence the admissible masks."""
        relevant = {
            key: value
            for key, value in self.to_flat_dict().items()
            if key.split(".", 1)[0] in VIABILITY_SECTIONS
        }
        relevant["actions"] = asdict(ActionGrid())
        if self.tables:
            with open(self.tables, "rb") as tables_file:
                relevant["tables_sha256"] = hashlib.sha256(tables_file.read()).hexdigest()
        return _digest(relevant)

    def vehicle_model(self) -> VehicleModel:
        if self.tables:
            aero, propulsion = load_tables(self.tables)
            vehicle = AeroPropulsion(self.vehicle, aero, propulsion)
        else:
            vehicle = AeroPropulsion(self.vehicle)
        return VehicleModel(vehicle=vehicle, m_floor=self.m_floor)

    def constraints(self) -> ConstraintSet:
        return ConstraintSet(model=self.vehicle_model(), soft=self.soft, hard=self.hard)

    def transitions(self) -> TransitionTable:
        return build_transitions(
            self.grid,
            ActionGrid(),
            self.constraints(),
            self.integrator.dt,
            self.hard_margin,
        )

    def compute_viability(self) -> ViabilityResult:
        return compute_feasible_set(
            self.grid,
            ActionGrid(),
            self.constraints(),
            self.integrator.dt,
            fingerprint=self.viability_fingerprint(),
            margin=self.hard_margin,
        )

    def shield(self, result: ViabilityResult) -> Shield:
        return Shield(
            result=result,
            grid=self.grid,
            constraints=self.constraints(),
            dt=self.integrator.dt,
            box=self.box,
            online_check=self.online_check,
            enabled=self.shielding,
        )


def _digest(flat: Mapping[str, Any]) -> str:
    canonical = json.dumps(flat, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def flatten(nested: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Joins nested dict keys with dots."""
    flat: Dict[str, Any] = {}
    for key, value in nested.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _convert(key: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"`{key}` must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        try:
            integral = not isinstance(value, bool) and float(value).is_integer()
        except (TypeError, ValueError):
            integral = False
        if not integral:
            raise ConfigurationError(f"`{key}` must be an integer, got {value!r}")
        return int(float(value))
    if isinstance(default, float):
        try:
            return to_si(value)
        except Exception as exc:
            raise ConfigurationError(f"Cannot read `{key}` = {value!r}: {exc}") from exc
    return str(value)


def _build(defaults: Any, values: Mapping[str, Any], prefix: str):
    """Rebuilds the dataclass instance `defaults` from the flat values."""
    kwargs = {}
    for spec in fields(defaults):
        if not spec.init:
            continue
        name = f"{prefix}{spec.name}"
        default = getattr(defaults, spec.name)
        if is_dataclass(default):
            kwargs[spec.name] = _build(default, values, f"{name}.")
        else:
            kwargs[spec.name] = values[name]
    return type(defaults)(**kwargs)


def from_flat_dict(flat: Mapping[str, Any]) -> ExperimentConfig:
    """Builds a configuration from dotted keys; missing keys keep their defaults.

    Raises:
        ConfigurationError: On unknown keys or values that fail validation.
    """
    defaults = ExperimentConfig().to_flat_dict()
    unknown = sorted(set(flat) - set(defaults))
    if unknown:
        raise ConfigurationError(f"Unknown configuration keys {unknown}")

    values = dict(defaults)
    for key, value in flat.items():
        values[key] = _convert(key, value, defaults[key])

    try:
        return _build(ExperimentConfig(), values, "")
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(fname: str) -> ExperimentConfig:
    """Reads a flat json configuration, e.g. `{"box.dh": "8 km", "learner.episodes": 200}`."""
    with open(fname, encoding="utf-8") as json_file:
        try:
            flat = json.load(json_file)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"`{fname}` is not valid json: {exc}") from exc
    if not isinstance(flat, dict):
        raise ConfigurationError(f"`{fname}` must hold a json object")
    return from_flat_dict(flat)


def dump_config(config: ExperimentConfig, fname: str):
    with open(fname, "w", encoding="utf-8") as json_file:
        json.dump(config.to_flat_dict(), json_file, indent=2, sort_keys=True)

