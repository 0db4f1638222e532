#!/usr/bin/env python3
"""
⚙️ CONFIGURATION v1.0
🔧 Конфигурация Lancaster-пакета

Настройки читаются из .env и переменных окружения:
• размеры перестановок и бутстрепа
• параметры Monte Carlo исследований
• хранилище результатов и логирование
"""

import os
import logging
from pathlib import Path
from dataclasses import dataclass, field
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


@dataclass
class InferenceConfig:
    """🧪 Тесты и доверительные интервалы"""
    n_permutations: int = 1000
    n_bootstrap: int = 500
    delta: float = 1e-6           # подстановка для неположительной дисперсии
    max_redraws: int = 10         # повторы вырожденных бутстреп-выборок
    level: float = 0.95


@dataclass
class StudyDefaults:
    """🎲 Monte Carlo исследования"""
    replications: int = 2000
    full_scale_replications: int = 10000
    full_scale: bool = False
    workers: int = 1
    chunk_size: int = 100
    truth_n: int = 1_000_000
    full_scale_truth_n: int = 10_000_000
    truth_seed: int = 20240101

    @property
    def effective_replications(self) -> int:
        return self.full_scale_replications if self.full_scale else self.replications

    @property
    def effective_truth_n(self) -> int:
        return self.full_scale_truth_n if self.full_scale else self.truth_n


@dataclass
class DatabaseConfig:
    """💾 Хранилище результатов"""
    path: str = "data/lancaster.db"
    wal_mode: bool = True


@dataclass
class LoggingConfig:
    """📝 Логирование"""
    level: str = "INFO"
    file_path: str = "data/logs/lancaster.log"


@dataclass
class Config:
    """⚙️ Главная конфигурация"""
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    study: StudyDefaults = field(default_factory=StudyDefaults)
    database: DatabaseConfig = field(default_factory=DatabaseConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    true_values_path: str = "data/true_values.json"


def _env_bool(name: str, default: bool) -> bool:
    return os.getenv(name, "true" if default else "false").lower() == "true"


def _env_number(name: str, default, cast):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        logger.warning(f"❌ Не удалось разобрать {name}={raw!r}, оставляю {default}")
        return default


def load_config(create_dirs: bool = True) -> Config:
    """📥 Загрузка конфигурации из переменных окружения"""

    config = Config()

    # =================== INFERENCE ===================
    config.inference.n_permutations = _env_number("LANCASTER_N_PERMUTATIONS", 1000, int)
    config.inference.n_bootstrap = _env_number("LANCASTER_N_BOOTSTRAP", 500, int)
    config.inference.delta = _env_number("LANCASTER_DELTA", 1e-6, float)
    config.inference.max_redraws = _env_number("LANCASTER_MAX_REDRAWS", 10, int)
    config.inference.level = _env_number("LANCASTER_LEVEL", 0.95, float)

    # =================== STUDY ===================
    config.study.replications = _env_number("LANCASTER_REPLICATIONS", 2000, int)
    config.study.full_scale = _env_bool("LANCASTER_FULL_SCALE", False)
    config.study.workers = _env_number("LANCASTER_WORKERS", 1, int)
    config.study.chunk_size = _env_number("LANCASTER_CHUNK_SIZE", 100, int)
    config.study.truth_n = _env_number("LANCASTER_TRUTH_N", 1_000_000, int)
    config.study.truth_seed = _env_number("LANCASTER_TRUTH_SEED", 20240101, int)

    # =================== DATABASE / LOGGING ===================
    config.database.path = os.getenv("DATABASE_PATH", "data/lancaster.db")
    config.database.wal_mode = _env_bool("DB_WAL_MODE", True)
    config.logging.level = os.getenv("LOG_LEVEL", "INFO").upper()
    config.logging.file_path = os.getenv("LOG_FILE", "data/logs/lancaster.log")
    config.true_values_path = os.getenv("LANCASTER_TRUE_VALUES", "data/true_values.json")

    if not 0.0 < config.inference.level < 1.0:
        logger.warning(f"⚠️ LANCASTER_LEVEL={config.inference.level} вне (0,1), беру 0.95")
        config.inference.level = 0.95
    if config.study.workers < 1:
        config.study.workers = 1

    if create_dirs:
        for directory in (Path(config.database.path).parent, Path(config.logging.file_path).parent):
            directory.mkdir(parents=True, exist_ok=True)

    if config.study.full_scale:
        logger.info(f"🎲 Полный масштаб: {config.study.effective_replications} повторений")

    logger.debug("⚙️ Конфигурация загружена")
    return config


def create_example_env() -> str:
    """📝 Пример .env файла"""

    return """# Lancaster correlation toolkit
# ============================================

# ТЕСТЫ И ИНТЕРВАЛЫ
LANCASTER_N_PERMUTATIONS=1000
LANCASTER_N_BOOTSTRAP=500
LANCASTER_DELTA=1e-6
LANCASTER_LEVEL=0.95

# MONTE CARLO
LANCASTER_REPLICATIONS=2000
LANCASTER_FULL_SCALE=false
LANCASTER_WORKERS=4
LANCASTER_TRUTH_N=1000000

# ХРАНИЛИЩЕ
DATABASE_PATH=data/lancaster.db
DB_WAL_MODE=true
LANCASTER_TRUE_VALUES=data/true_values.json

# ЛОГИРОВАНИЕ
LOG_LEVEL=INFO
LOG_FILE=data/logs/lancaster.log
"""


if __name__ == "__main__":
    with open(".env.example", "w", encoding="utf-8") as f:
        f.write(create_example_env())

    print("📝 Создан .env.example")
