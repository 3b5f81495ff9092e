from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from src.model.lattice import LatticePoint
from src.model.lpp import WeightField
from src.utils.rng import make_stream

# the first call of every numba kernel compiles it
settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_field(seed: int, width: int, height: int, lo: LatticePoint = LatticePoint(0, 0)) -> WeightField:
    values = make_stream(seed, 0, 77).exponential(1.0, size=(width, height))
    return WeightField.from_array(values, lo)


@pytest.fixture
def field_factory():
    return random_field


@pytest.fixture
def isolated_settings(tmp_path, monkeypatch):
    path = tmp_path / "settings.ini"
    monkeypatch.setenv("CORNERGROWTH_SETTINGS", str(path))
    monkeypatch.delenv("CORNERGROWTH_OUT", raising=False)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
