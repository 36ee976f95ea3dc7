"""Shared marked groups and balls"""

import numpy as np
import pytest

from fgromov.config import settings
from fgromov.models import catalog
from fgromov.services.ball_service import BallService


@pytest.fixture(scope="session")
def balls():
    return BallService()


@pytest.fixture(scope="session")
def z1():
    return catalog.free_abelian(1)


@pytest.fixture(scope="session")
def z2():
    return catalog.free_abelian(2)


@pytest.fixture(scope="session")
def heisenberg():
    return catalog.heisenberg()


@pytest.fixture(scope="session")
def free2():
    return catalog.free_group(2)


@pytest.fixture(scope="session")
def lamplighter():
    return catalog.lamplighter()


@pytest.fixture(scope="session")
def heisenberg_ball_8(balls, heisenberg):
    return balls.enumerate_ball(heisenberg, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "FGROMOV_CACHE", str(tmp_path / "cache"))
