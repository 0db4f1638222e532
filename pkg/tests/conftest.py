"""Общие фикстуры тестов"""

import numpy as np
import pytest

from config import Config
from database import ResultsDatabase
from app.modules.estimators import Sample
from app.modules.samplers import parse_distribution, sample


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bvn_sample():
    return sample(parse_distribution("BVN(0.5)"), 200, 7)


@pytest.fixture
def skewed_sample(rng):
    x = rng.exponential(size=400)
    y = 0.4 * x + rng.gamma(2.0, size=400)
    return Sample(x, y)


@pytest.fixture
def config(tmp_path):
    cfg = Config()
    cfg.database.path = str(tmp_path / "lancaster.db")
    cfg.logging.file_path = str(tmp_path / "logs" / "lancaster.log")
    cfg.true_values_path = str(tmp_path / "true_values.json")
    cfg.study.chunk_size = 10
    cfg.study.truth_n = 5000
    return cfg


@pytest.fixture
async def database(config):
    db = ResultsDatabase(config.database)
    await db.initialize()
    yield db
    await db.close()


@pytest.fixture
def cli_env(tmp_path, monkeypatch):
    """Окружение CLI с путями во временном каталоге"""
    monkeypatch.setenv("DATABASE_PATH", str(tmp_path / "cli.db"))
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "logs" / "cli.log"))
    monkeypatch.setenv("LANCASTER_TRUE_VALUES", str(tmp_path / "true_values.json"))
    monkeypatch.setenv("LANCASTER_TRUTH_N", "5000")
    return tmp_path
