from __future__ import annotations

import pytest

from impedance_swarm import bundled_database_path, bundled_scenario_dir, bundled_scenarios
from impedance_swarm.retrieval import load_database


@pytest.fixture(scope="session")
def scenarios():
    return bundled_scenarios()


@pytest.fixture(scope="session")
def experiments():
    return bundled_scenarios(experiments_only=True)


@pytest.fixture(scope="session")
def db():
    return load_database(bundled_database_path())


@pytest.fixture(scope="session")
def scenario_dir():
    return bundled_scenario_dir()

