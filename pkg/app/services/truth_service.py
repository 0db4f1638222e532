#!/usr/bin/env python3
"""
🎯 TRUTH SERVICE v1.0
📌 Истинные значения ρ_L и ρ_L,l для оценки покрытия интервалов

Порядок поиска: аналитическое значение -> файл данных -> база -> Monte Carlo.
Каждое значение хранится вместе с происхождением (analytic / monte_carlo, n, seed).
"""

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import aiofiles

from app.exceptions import MissingTrueValueError
from app.modules.estimators import lancaster_linear, lancaster_rank
from app.modules.inference import EstimatorKind
from app.modules.samplers import DistributionKind, DistributionSpec, parse_distribution, sample, stream_rng

logger = logging.getLogger(__name__)

ANALYTIC = "analytic"
MONTE_CARLO = "monte_carlo"

# ρ_L,l на равномерных законах: (ρ₁, ρ₂) считаются в замкнутой форме
_UNIFORM_LINEAR = {
    DistributionKind.UNIF_DISC: 1.0 / 3.0,
    DistributionKind.UNIF_RHOMB: 3.0 / 7.0,
    DistributionKind.UNIF_TRIANGLE: 1.0 / 2.0,
}


@dataclass(frozen=True)
class TrueValue:
    """📌 Истинное значение коэффициента с происхождением"""
    distribution: str
    estimator: str
    value: float
    provenance: str
    n: Optional[int] = None
    seed: Optional[int] = None


def analytic_true_value(spec: DistributionSpec, estimator: EstimatorKind) -> Optional[float]:
    """📐 Известные замкнутые формы; None, если их нет"""
    kind = spec.kind
    if kind is DistributionKind.BVN:
        return abs(spec.rho)
    if kind is DistributionKind.NORMAL_MIXTURE:
        # нормальные маргиналы: ρ₁ = 1/2 - p, ρ₂ = 1/4
        return max(abs(0.5 - spec.p), 0.25)
    if kind is DistributionKind.MN4:
        return 0.0
    if estimator is EstimatorKind.LINEAR:
        return _UNIFORM_LINEAR.get(kind)
    return None


def _large_enough(value: TrueValue, min_n: Optional[int]) -> bool:
    return min_n is None or value.provenance != MONTE_CARLO or (value.n or 0) >= min_n


def monte_carlo_true_value(spec: DistributionSpec, estimator: EstimatorKind, n: int, seed: int) -> float:
    """🎲 Оценка по одной большой выборке"""
    s = sample(spec, n, stream_rng(seed, spec.label, 0))
    estimate = lancaster_rank(s) if estimator is EstimatorKind.RANK else lancaster_linear(s)
    return estimate.value


class TruthService:
    """🎯 Сервис истинных значений"""

    def __init__(self, config, database=None):
        self.config = config
        self.database = database
        self.path = Path(config.true_values_path)
        self._shipped: Dict[Tuple[str, str], TrueValue] = {}
        self._loaded = False

    async def _load_shipped(self):
        if self._loaded:
            return
        self._loaded = True
        if not self.path.exists():
            logger.warning(f"⚠️ Файл истинных значений не найден: {self.path}")
            return
        async with aiofiles.open(self.path, "r", encoding="utf-8") as f:
            payload = json.loads(await f.read())
        for item in payload.get("values", []):
            value = TrueValue(**item)
            self._shipped[(value.distribution, value.estimator)] = value
        logger.info(f"📌 Загружено {len(self._shipped)} истинных значений")

    async def get(self, spec: DistributionSpec, estimator: EstimatorKind,
                  allow_compute: bool = True, min_n: Optional[int] = None) -> TrueValue:
        """🎯 Истинное значение для (закон, оценка); min_n отбрасывает Monte Carlo меньшего объема"""
        if spec.heavy_tailed and estimator is EstimatorKind.LINEAR:
            raise MissingTrueValueError(f"❌ ρ_L,l не определен для {spec.label}")

        analytic = analytic_true_value(spec, estimator)
        if analytic is not None:
            return TrueValue(spec.label, estimator.value, analytic, ANALYTIC)

        await self._load_shipped()
        key = (spec.label, estimator.value)
        if key in self._shipped and _large_enough(self._shipped[key], min_n):
            return self._shipped[key]

        if self.database is not None:
            row = await self.database.get_true_value(*key)
            if row:
                stored = TrueValue(row["distribution"], row["estimator"], row["value"],
                                   row["provenance"], row["n"], row["seed"])
                if _large_enough(stored, min_n):
                    return stored

        if not allow_compute:
            raise MissingTrueValueError(f"❌ Нет истинного значения {estimator.value} для {spec.label}")

        n, seed = self.config.study.effective_truth_n, self.config.study.truth_seed
        logger.info(f"🎲 Считаю истинное значение {estimator.value} для {spec.label} при n={n}")
        value = monte_carlo_true_value(spec, estimator, n, seed)
        if not math.isfinite(value):
            raise MissingTrueValueError(f"❌ Не удалось оценить истинное значение для {spec.label}")
        result = TrueValue(spec.label, estimator.value, value, MONTE_CARLO, n, seed)
        if self.database is not None:
            await self.database.save_true_value(*key, value, MONTE_CARLO, n, seed)
        self._shipped[key] = result
        return result

    async def regenerate(self, labels: List[str], path: Optional[Path] = None) -> List[TrueValue]:
        """📝 Пересчет значений для labels; остальные строки файла сохраняются"""
        await self._load_shipped()
        kept = dict(self._shipped)
        values = []
        for label in labels:
            spec = parse_distribution(label)
            for estimator in EstimatorKind:
                if spec.heavy_tailed and estimator is EstimatorKind.LINEAR:
                    continue
                values.append(await self.get(spec, estimator, min_n=self.config.study.effective_truth_n))
        for value in values:
            kept[(value.distribution, value.estimator)] = value
        target = path or self.path
        target.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(target, "w", encoding="utf-8") as f:
            await f.write(json.dumps({"version": 1, "values": [asdict(v) for v in kept.values()]},
                                     indent=2, sort_keys=True, ensure_ascii=False))
        logger.info(f"✅ Пересчитано {len(values)}, записано {len(kept)} истинных значений в {target}")
        return values
