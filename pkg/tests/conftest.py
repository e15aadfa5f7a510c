"""
Shared fixtures and Hypothesis profiles.

HYPOTHESIS_PROFILE=acceptance runs the property suites on 1000 examples.
"""

import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from services.problem_parser import load_problem

settings.register_profile("dev", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("acceptance", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixture_path():
    """Path of a problem file under fixtures/."""
    def resolve(name: str) -> Path:
        return FIXTURES / name
    return resolve


@pytest.fixture
def problem(fixture_path):
    """Load a parsed problem from fixtures/."""
    def load(name: str):
        return load_problem(fixture_path(name))
    return load
