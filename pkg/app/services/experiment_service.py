#!/usr/bin/env python3
"""
🎲 EXPERIMENT SERVICE v1.0
📊 Monte Carlo исследования: оценки, мощность тестов, покрытие интервалов

• конфигурация исследования - TOML, проверка через pydantic
• повторения режутся на чанки и считаются в пуле процессов
• каждая ячейка (закон, метод) сохраняется сразу, запуск можно продолжить
"""

import asyncio
import hashlib
import json
import logging
import math
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.exceptions import ConfigurationError, LancasterError
from app.modules.asymptotics import CovMatrix2
from app.modules.estimators import CoefficientKind, Sample, evaluate_coefficient
from app.modules.inference import (
    AsymptoticMode,
    CIMethod,
    EstimatorKind,
    covariance_for,
    estimate_for,
    interval_from,
    test_linear_asymptotic,
    test_permutation,
    test_rank_asymptotic,
)
from app.modules.samplers import DistributionSpec, parse_distribution, sample, stream_rng
from app.services.report_service import CellResult, StudyReport

logger = logging.getLogger(__name__)


class StudyKind(str, Enum):
    ESTIMATE = "estimate"
    POWER = "power"
    COVERAGE = "coverage"


class PowerMethod(str, Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"
    LINEAR_PERMUTATION = "linear_permutation"
    RANK_ASYMPTOTIC = "rank_asymptotic"
    RANK_PERMUTATION = "rank_permutation"
    DCOR = "dcor"
    XI = "xi"
    LINEAR_ASYMPTOTIC_SYM = "linear_asymptotic_sym"
    LINEAR_ASYMPTOTIC_TAU = "linear_asymptotic_tau"


_PERMUTATION_COEFFICIENT = {
    PowerMethod.PEARSON: CoefficientKind.PEARSON,
    PowerMethod.SPEARMAN: CoefficientKind.SPEARMAN,
    PowerMethod.LINEAR_PERMUTATION: CoefficientKind.LANCASTER_LINEAR,
    PowerMethod.RANK_PERMUTATION: CoefficientKind.LANCASTER_RANK,
    PowerMethod.DCOR: CoefficientKind.DCOR,
    PowerMethod.XI: CoefficientKind.XI,
}

_METHOD_IDS = {
    StudyKind.ESTIMATE: [k.value for k in CoefficientKind],
    StudyKind.POWER: [m.value for m in PowerMethod],
    StudyKind.COVERAGE: [m.value for m in CIMethod],
}


def valid_methods(kind: StudyKind) -> List[str]:
    return list(_METHOD_IDS[kind])


class StudyConfig(BaseModel):
    """⚙️ Конфигурация Monte Carlo исследования"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "study"
    kind: StudyKind
    distributions: List[str] = Field(min_length=1)
    methods: List[str] = Field(min_length=1)
    n: int = Field(ge=3)
    seed: int = Field(ge=0)
    replications: Optional[int] = Field(default=None, ge=1)
    alpha: float = 0.05
    n_permutations: int = Field(default=1000, ge=1)
    n_bootstrap: int = Field(default=500, ge=2)
    delta: float = Field(default=1e-6, gt=0.0)
    single_sample: bool = False

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"alpha должен лежать в (0,1), получено {value}")
        return value

    @field_validator("distributions")
    @classmethod
    def _check_distributions(cls, labels: List[str]) -> List[str]:
        for label in labels:
            parse_distribution(label)
        return labels

    @model_validator(mode="after")
    def _check_methods(self) -> "StudyConfig":
        allowed = _METHOD_IDS[self.kind]
        unknown = [m for m in self.methods if m not in allowed]
        if unknown:
            raise ValueError(f"неизвестные методы {unknown}; допустимы: {', '.join(allowed)}")
        return self

    def specs(self) -> List[DistributionSpec]:
        return [parse_distribution(label) for label in self.distributions]

    def resolved(self, default_replications: int) -> "StudyConfig":
        replications = 1 if self.single_sample else (self.replications or default_replications)
        return self.model_copy(update={"replications": replications})

    def run_id(self) -> str:
        """SHA-256 канонического JSON конфигурации"""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_study_config(path: Path) -> StudyConfig:
    """📥 Чтение TOML-конфигурации исследования"""
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"❌ Файл конфигурации не найден: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"❌ Ошибка разбора {path}: {e}") from e
    return parse_study_config(raw)


def parse_study_config(raw: Dict) -> StudyConfig:
    try:
        return StudyConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"❌ Некорректная конфигурация ({where}): {first['msg']}") from e


# =================== ЯЧЕЙКИ ===================

@dataclass
class CellAccumulator:
    """➕ Суммы и счетчики ячейки; объединение не зависит от порядка"""
    replications: int = 0
    failures: int = 0
    hits: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    length_total: float = 0.0
    length_sq: float = 0.0

    def merge(self, other: "CellAccumulator") -> "CellAccumulator":
        return CellAccumulator(*(getattr(self, f) + getattr(other, f) for f in self.__dataclass_fields__))

    @property
    def valid(self) -> int:
        return self.replications - self.failures

    def as_dict(self) -> Dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def _mean_and_error(total: float, total_sq: float, count: int):
    if count == 0:
        return None, None
    mean = total / count
    if count < 2:
        return mean, None
    variance = max((total_sq - count * mean * mean) / (count - 1), 0.0)
    return mean, math.sqrt(variance / count)


def finalize_cell(kind: StudyKind, distribution: str, method: str, acc: CellAccumulator,
                  available: bool = True, true_value: Optional[float] = None) -> CellResult:
    """📊 Доля / среднее и стандартные ошибки Монте-Карло"""
    if not available:
        return CellResult(distribution, method, acc.replications, 0, available=False)
    valid = acc.valid
    if kind is StudyKind.ESTIMATE:
        value, error = _mean_and_error(acc.total, acc.total_sq, valid)
        return CellResult(distribution, method, acc.replications, valid, value=value,
                          std_error=error, failures=acc.failures)

    rate = acc.hits / valid if valid else None
    error = math.sqrt(rate * (1.0 - rate) / valid) if valid else None
    if kind is StudyKind.POWER:
        return CellResult(distribution, method, acc.replications, valid, value=rate,
                          std_error=error, failures=acc.failures)
    length, length_error = _mean_and_error(acc.length_total, acc.length_sq, valid)
    return CellResult(distribution, method, acc.replications, valid, value=rate, std_error=error,
                      mean_length=length, length_std_error=length_error,
                      true_value=true_value, failures=acc.failures)


def cell_available(kind: StudyKind, spec: DistributionSpec, method: str) -> bool:
    """Ячейки '-': моментные величины без нужных моментов"""
    if not spec.heavy_tailed:
        return True
    if kind is StudyKind.ESTIMATE:
        needs = {"pearson": 2.0, "lancaster_linear": 4.0, "dcor": 1.0}
        return spec.nu > needs.get(method, 0.0)
    if kind is StudyKind.COVERAGE:
        return CIMethod(method).estimator is EstimatorKind.RANK
    return True


# =================== РАБОЧИЕ ФУНКЦИИ ===================

@dataclass(frozen=True)
class ChunkTask:
    """📦 Задание для процесса: повторения [start, stop) одного закона"""
    study: Dict
    label: str
    methods: List[str]
    start: int
    stop: int
    true_values: Dict[str, float] = field(default_factory=dict)


def _power_hit(study: StudyConfig, method: PowerMethod, s: Sample, rng) -> bool:
    if method is PowerMethod.RANK_ASYMPTOTIC:
        result = test_rank_asymptotic(s)
    elif method is PowerMethod.LINEAR_ASYMPTOTIC_SYM:
        result = test_linear_asymptotic(s, AsymptoticMode.ASSUME_SYMMETRIC)
    elif method is PowerMethod.LINEAR_ASYMPTOTIC_TAU:
        result = test_linear_asymptotic(s, AsymptoticMode.ESTIMATE_TAU)
    else:
        result = test_permutation(s, _PERMUTATION_COEFFICIENT[method], study.n_permutations, rng)
    return result.p_value <= study.alpha


def run_chunk(task: ChunkTask) -> Dict[str, CellAccumulator]:
    """🔁 Повторения одного чанка; чистая функция задания"""
    study = StudyConfig.model_validate(task.study)
    spec = parse_distribution(task.label)
    accumulators = {method: CellAccumulator() for method in task.methods}

    for rep in range(task.start, task.stop):
        s = sample(spec, study.n, stream_rng(study.seed, task.label, rep))
        covariances: Dict[tuple, CovMatrix2] = {}
        for method in task.methods:
            acc = accumulators[method]
            acc.replications += 1
            rng = stream_rng(study.seed, f"{task.label}/{method}", rep)
            try:
                if study.kind is StudyKind.ESTIMATE:
                    value = evaluate_coefficient(CoefficientKind(method), s, rng)
                    acc.total += value
                    acc.total_sq += value * value
                elif study.kind is StudyKind.POWER:
                    acc.hits += int(_power_hit(study, PowerMethod(method), s, rng))
                else:
                    ci_method = CIMethod(method)
                    # обычный и консервативный интервалы делят одну оценку ковариации
                    key = (ci_method.bootstrap, ci_method.estimator)
                    if key not in covariances:
                        shared = stream_rng(study.seed, f"{task.label}/{key[1].value}/{key[0]}", rep)
                        covariances[key] = covariance_for(s, ci_method, study.n_bootstrap, shared)
                    interval = interval_from(estimate_for(s, ci_method), covariances[key], s.n, ci_method,
                                             1.0 - study.alpha, study.delta)
                    acc.hits += int(interval.contains(task.true_values[ci_method.estimator.value]))
                    acc.length_total += interval.length
                    acc.length_sq += interval.length ** 2
            except LancasterError as e:
                acc.failures += 1
                logger.debug(f"⚠️ {task.label}/{method}, повторение {rep}: {e}")
    return accumulators


def chunk_ranges(replications: int, chunk_size: int) -> List[tuple]:
    return [(start, min(start + chunk_size, replications)) for start in range(0, replications, chunk_size)]


# =================== СЕРВИС ===================

class ExperimentService:
    """🎲 Сервис Monte Carlo исследований"""

    def __init__(self, config, database, truth_service):
        self.config = config
        self.database = database
        self.truth = truth_service
        logger.info("🎲 ExperimentService инициализирован")

    async def run_estimate_table(self, study: StudyConfig) -> StudyReport:
        return await self._run(study, StudyKind.ESTIMATE)

    async def run_power_study(self, study: StudyConfig) -> StudyReport:
        return await self._run(study, StudyKind.POWER)

    async def run_coverage_study(self, study: StudyConfig) -> StudyReport:
        return await self._run(study, StudyKind.COVERAGE)

    async def run(self, study: StudyConfig) -> StudyReport:
        return await self._run(study, study.kind)

    async def _true_values(self, spec: DistributionSpec, methods: List[str]) -> Dict[str, float]:
        values = {}
        for estimator in {CIMethod(m).estimator for m in methods}:
            values[estimator.value] = (await self.truth.get(spec, estimator)).value
        return values

    async def _execute(self, tasks: List[ChunkTask], executor: Optional[ProcessPoolExecutor]):
        if executor is None:
            return [run_chunk(task) for task in tasks]
        loop = asyncio.get_running_loop()
        return await asyncio.gather(*(loop.run_in_executor(executor, run_chunk, task) for task in tasks))

    async def _run(self, study: StudyConfig, kind: StudyKind,
                   progress: Optional[Callable[[CellResult], None]] = None) -> StudyReport:
        if study.kind is not kind:
            raise ConfigurationError(f"❌ Конфигурация вида {study.kind.value}, ожидается {kind.value}")
        study = study.resolved(self.config.study.effective_replications)
        run_id = study.run_id()
        started = time.perf_counter()
        await self.database.register_run(run_id, study.name, kind.value, study.model_dump(mode="json"), study.seed)
        stored = await self.database.load_cells(run_id)
        logger.info(f"🚀 Исследование {study.name}: {len(study.distributions)} законов, "
                    f"{study.replications} повторений, сохранено ячеек: {len(stored)}")

        workers = self.config.study.workers
        executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        cells: List[CellResult] = []
        try:
            for spec in study.specs():
                label = spec.label
                pending = [m for m in study.methods
                           if (label, m) not in stored and cell_available(kind, spec, m)]
                truths: Dict[str, float] = {}
                if kind is StudyKind.COVERAGE and pending:
                    truths = await self._true_values(spec, pending)

                if pending:
                    cell_started = time.perf_counter()
                    tasks = [ChunkTask(study.model_dump(mode="json"), label, pending, start, stop, truths)
                             for start, stop in chunk_ranges(study.replications, self.config.study.chunk_size)]
                    merged = {m: CellAccumulator() for m in pending}
                    for result in await self._execute(tasks, executor):
                        for method, acc in result.items():
                            merged[method] = merged[method].merge(acc)
                    elapsed = time.perf_counter() - cell_started
                    for method in pending:
                        truth = truths.get(CIMethod(method).estimator.value) if kind is StudyKind.COVERAGE else None
                        stored[(label, method)] = {
                            "distribution": label, "method": method, "available": True,
                            "true_value": truth, "elapsed": elapsed, **merged[method].as_dict(),
                        }
                        await self.database.save_cell(run_id, stored[(label, method)])
                    logger.info(f"✅ {label}: {len(pending)} ячеек за {elapsed:.1f} с")

                for method in study.methods:
                    if not cell_available(kind, spec, method):
                        cell = finalize_cell(kind, label, method,
                                             CellAccumulator(replications=study.replications), available=False)
                    else:
                        row = stored[(label, method)]
                        acc = CellAccumulator(**{f: row[f] for f in CellAccumulator.__dataclass_fields__})
                        cell = finalize_cell(kind, label, method, acc, True, row.get("true_value"))
                    cells.append(cell)
                    if progress:
                        progress(cell)
        finally:
            if executor is not None:
                executor.shutdown()

        return StudyReport(
            run_id=run_id, name=study.name, kind=kind.value, n=study.n, seed=study.seed,
            replications=study.replications, cells=cells,
            metadata={"elapsed": round(time.perf_counter() - started, 3), "workers": workers},
        )
