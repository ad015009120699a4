from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from reachcert.model import load_problem

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "reachcert" / "fixtures"

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def fixture_path(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture(scope="session")
def problems():
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_problem(FIXTURES / f"{name}.prob")
        return cache[name]

    return get
