from pathlib import Path

import pytest

from pearlsim.formats import load_scenario

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def canonical_bundle():
    return load_scenario(FIXTURES / "canonical.json")


@pytest.fixture
def stop_bundle():
    return load_scenario(FIXTURES / "stop.json")


@pytest.fixture
def straight_bundle():
    return load_scenario(FIXTURES / "straight.json")
