"""
共用測試夾具
"""

import numpy as np
import pytest

from pkf_tracking.config import ExperimentConfig
from pkf_tracking.coordmap import CartesianMeasurementMap, PolarMeasurementMap
from pkf_tracking.sigma import generate_rule


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("PKF_DEBUG", "PKF_THREADS", "PKF_OUTPUT_DIR", "PKF_LANGUAGE"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def rule():
    return generate_rule(4)


@pytest.fixture
def polar_map():
    return PolarMeasurementMap(2)


@pytest.fixture
def doppler_map():
    return PolarMeasurementMap(3)


@pytest.fixture
def cartesian_map():
    return CartesianMeasurementMap(2)


@pytest.fixture
def make_spd(rng):
    """隨機對稱正定矩陣"""

    def factory(n: int = 4, scale: float = 1.0) -> np.ndarray:
        A = rng.normal(size=(n, n))
        return scale * (A @ A.T + n * np.eye(n))

    return factory


@pytest.fixture
def polar_noise():
    """距離／方位基準情境的完整量測雜訊協方差"""
    R = np.diag([30.0**2, 0.0873**2, 10.0**2, 10.0**2])
    R[0, 2] = R[2, 0] = -0.2 * 30.0 * 10.0
    return R


@pytest.fixture
def small_config(tmp_path):
    return ExperimentConfig(
        trials=3,
        n_updates=15,
        seed=11,
        filters=("pkf", "spkf", "ekf"),
        output_dir=str(tmp_path / "out"),
        threads=1,
    )
