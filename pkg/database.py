#!/usr/bin/env python3
"""
💾 RESULTS DATABASE v1.0
🔁 Хранилище Monte Carlo исследований: запуски, ячейки, истинные значения
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import aiosqlite

logger = logging.getLogger(__name__)

CellKey = Tuple[str, str]


class ResultsDatabase:
    """💾 Сервис хранения результатов исследований"""

    def __init__(self, config):
        self.config = config
        self.db_path = config.path
        self.connection: Optional[aiosqlite.Connection] = None
        logger.info("💾 ResultsDatabase инициализирован")

    async def initialize(self):
        """🚀 Инициализация базы данных"""
        try:
            if self.db_path != ":memory:":
                Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
            self.connection = await aiosqlite.connect(self.db_path, timeout=30.0)
            self.connection.row_factory = aiosqlite.Row

            if self.config.wal_mode and self.db_path != ":memory:":
                await self.connection.execute("PRAGMA journal_mode=WAL")
            await self.connection.execute("PRAGMA foreign_keys=ON")
            await self.connection.execute("PRAGMA synchronous=NORMAL")

            await self._create_tables()
            await self._create_indexes()
            logger.info("🚀 База результатов инициализирована")
        except Exception as e:
            logger.error(f"❌ Ошибка инициализации базы данных: {e}")
            raise

    async def close(self):
        """🔒 Закрытие соединения"""
        if self.connection:
            await self.connection.close()
            self.connection = None
            logger.info("🔒 База данных закрыта")

    async def __aenter__(self) -> "ResultsDatabase":
        await self.initialize()
        return self

    async def __aexit__(self, *exc):
        await self.close()

    async def _create_tables(self):
        """📋 Создание таблиц"""
        tables = [
            # Запуски исследований
            """
            CREATE TABLE IF NOT EXISTS study_runs (
                run_id TEXT PRIMARY KEY,
                name TEXT NOT NULL,
                kind TEXT NOT NULL,
                config_json TEXT NOT NULL,
                seed INTEGER NOT NULL,
                created_at DATETIME DEFAULT CURRENT_TIMESTAMP
            )
            """,
            # Ячейки (закон, метод): суммы и счетчики
            """
            CREATE TABLE IF NOT EXISTS study_cells (
                run_id TEXT NOT NULL,
                distribution TEXT NOT NULL,
                method TEXT NOT NULL,
                replications INTEGER NOT NULL,
                failures INTEGER DEFAULT 0,
                hits INTEGER DEFAULT 0,
                total REAL DEFAULT 0,
                total_sq REAL DEFAULT 0,
                length_total REAL DEFAULT 0,
                length_sq REAL DEFAULT 0,
                true_value REAL,
                available BOOLEAN DEFAULT TRUE,
                elapsed REAL DEFAULT 0,
                updated_at DATETIME DEFAULT CURRENT_TIMESTAMP,
                PRIMARY KEY (run_id, distribution, method),
                FOREIGN KEY (run_id) REFERENCES study_runs (run_id)
            )
            """,
            # Истинные значения ρ_L / ρ_L,l
            """
            CREATE TABLE IF NOT EXISTS true_values (
                distribution TEXT NOT NULL,
                estimator TEXT NOT NULL,
                value REAL NOT NULL,
                provenance TEXT NOT NULL,
                n INTEGER,
                seed INTEGER,
                created_at DATETIME DEFAULT CURRENT_TIMESTAMP,
                PRIMARY KEY (distribution, estimator)
            )
            """,
        ]
        for table_sql in tables:
            await self.connection.execute(table_sql)
        await self.connection.commit()
        logger.info("📋 Таблицы созданы")

    async def _create_indexes(self):
        """🔍 Индексы"""
        indexes = [
            "CREATE INDEX IF NOT EXISTS idx_cells_run ON study_cells(run_id)",
            "CREATE INDEX IF NOT EXISTS idx_runs_kind ON study_runs(kind)",
        ]
        for index_sql in indexes:
            await self.connection.execute(index_sql)
        await self.connection.commit()

    # =================== ЗАПУСКИ ===================

    async def register_run(self, run_id: str, name: str, kind: str, config: Dict[str, Any], seed: int) -> bool:
        """📝 Регистрация запуска; False, если запуск уже был"""
        cursor = await self.connection.execute(
            "INSERT OR IGNORE INTO study_runs (run_id, name, kind, config_json, seed) VALUES (?, ?, ?, ?, ?)",
            (run_id, name, kind, json.dumps(config, sort_keys=True), seed),
        )
        await self.connection.commit()
        created = cursor.rowcount > 0
        if not created:
            logger.info(f"🔁 Продолжение запуска {run_id[:12]}")
        return created

    # =================== ЯЧЕЙКИ ===================

    async def save_cell(self, run_id: str, cell: Dict[str, Any]):
        """💾 Сохранение (или замена) ячейки"""
        await self.connection.execute(
            """
            INSERT OR REPLACE INTO study_cells
                (run_id, distribution, method, replications, failures, hits, total, total_sq,
                 length_total, length_sq, true_value, available, elapsed, updated_at)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, CURRENT_TIMESTAMP)
            """,
            (
                run_id, cell["distribution"], cell["method"], cell["replications"],
                cell.get("failures", 0), cell.get("hits", 0), cell.get("total", 0.0),
                cell.get("total_sq", 0.0), cell.get("length_total", 0.0), cell.get("length_sq", 0.0),
                cell.get("true_value"), bool(cell.get("available", True)), cell.get("elapsed", 0.0),
            ),
        )
        await self.connection.commit()

    async def load_cells(self, run_id: str) -> Dict[CellKey, Dict[str, Any]]:
        """📊 Все сохраненные ячейки запуска"""
        async with self.connection.execute(
            "SELECT * FROM study_cells WHERE run_id = ? ORDER BY rowid", (run_id,)
        ) as cursor:
            rows = await cursor.fetchall()
        cells = {}
        for row in rows:
            cell = dict(row)
            cell["available"] = bool(cell["available"])
            cells[(cell["distribution"], cell["method"])] = cell
        return cells

    # =================== ИСТИННЫЕ ЗНАЧЕНИЯ ===================

    async def save_true_value(self, distribution: str, estimator: str, value: float,
                              provenance: str, n: Optional[int] = None, seed: Optional[int] = None):
        await self.connection.execute(
            """
            INSERT OR REPLACE INTO true_values (distribution, estimator, value, provenance, n, seed)
            VALUES (?, ?, ?, ?, ?, ?)
            """,
            (distribution, estimator, value, provenance, n, seed),
        )
        await self.connection.commit()

    async def get_true_value(self, distribution: str, estimator: str) -> Optional[Dict[str, Any]]:
        async with self.connection.execute(
            "SELECT * FROM true_values WHERE distribution = ? AND estimator = ?", (distribution, estimator)
        ) as cursor:
            row = await cursor.fetchone()
        return dict(row) if row else None
