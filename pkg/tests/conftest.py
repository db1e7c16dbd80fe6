"""Shared fixtures"""

import pytest

from hypershield.config import ExperimentConfig
from hypershield.viability import ViabilityResult


@pytest.fixture(scope="session")
def default_config() -> ExperimentConfig:
    """The default experiment configuration."""
    return ExperimentConfig()


@pytest.fixture(scope="session")
def default_result(default_config) -> ViabilityResult:
    """The viable set of the default configuration, computed once."""
    return default_config.compute_viability()


@pytest.fixture(scope="session")
def default_constraints(default_config):
    """The constraint set of the default configuration."""
    return default_config.constraints()
