#!/usr/bin/env python3
"""
🧪 INFERENCE v1.0
🔬 Тесты независимости и доверительные интервалы для ρ_L и ρ_L,l

• асимптотические тесты (ранговый и моментный, τ = 0 или оцененный τ̂)
• перестановочные тесты: Монте-Карло и полный перебор при n <= 10
• бутстреп-оценка ковариации (ρ̂₁, ρ̂₂) и шесть видов интервалов
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import islice, permutations
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.stats import rankdata

from app.exceptions import (
    DegenerateSampleError,
    DomainError,
    SampleTooSmallError,
)
from app.modules.asymptotics import (
    MOMENT_INDEX,
    TAU_CLAMP,
    CovMatrix2,
    LimitKind,
    LimitLaw,
    limit_quantile,
    max_abs_cdf,
    sigma_star,
    sigma_star_independence,
)
from app.modules.estimators import (
    CoefficientKind,
    Component,
    LancasterEstimate,
    Sample,
    evaluate_coefficient,
    lancaster_linear,
    lancaster_rank,
    rank_score_components,
    ranks,
    standardize,
    vdw_scores,
)
from app.modules.special_functions import normal_quantile

logger = logging.getLogger(__name__)

EXACT_PERMUTATION_MAX_N = 10
_PERMUTATION_BATCH = 256
_EXACT_BATCH = 40_320
_TIE_RTOL = 1e-12


class TestMethod(str, Enum):
    RANK_ASYMPTOTIC = "rank_asymptotic"
    RANK_PERMUTATION = "rank_permutation"
    LINEAR_PERMUTATION = "linear_permutation"
    LINEAR_ASYMPTOTIC_SYM = "linear_asymptotic_sym"
    LINEAR_ASYMPTOTIC_TAU = "linear_asymptotic_tau"
    COMPETITOR_PERMUTATION = "competitor_permutation"
    EXACT_PERMUTATION = "exact_permutation"


class AsymptoticMode(str, Enum):
    ASSUME_SYMMETRIC = "assume_symmetric"
    ESTIMATE_TAU = "estimate_tau"


class EstimatorKind(str, Enum):
    RANK = "rank"
    LINEAR = "linear"


@dataclass(frozen=True)
class TestResult:
    """🧪 Результат теста независимости"""
    __test__ = False

    statistic: float
    p_value: float
    method: TestMethod
    n_permutations: Optional[int] = None
    coefficient: Optional[CoefficientKind] = None

    def __post_init__(self):
        if not math.isfinite(self.statistic):
            raise DomainError(f"❌ Статистика должна быть конечной, получено {self.statistic}")
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"❌ p-значение вне [0,1]: {self.p_value}")


class CIMethod(str, Enum):
    PLUG_IN = "plug_in"
    PLUG_IN_CONSERVATIVE = "plug_in_conservative"
    BOOT_LINEAR = "boot_linear"
    BOOT_LINEAR_CONSERVATIVE = "boot_linear_conservative"
    BOOT_RANK = "boot_rank"
    BOOT_RANK_CONSERVATIVE = "boot_rank_conservative"

    @property
    def estimator(self) -> EstimatorKind:
        return EstimatorKind.RANK if self in (CIMethod.BOOT_RANK, CIMethod.BOOT_RANK_CONSERVATIVE) \
            else EstimatorKind.LINEAR

    @property
    def conservative(self) -> bool:
        return self.value.endswith("conservative")

    @property
    def bootstrap(self) -> bool:
        return self.value.startswith("boot")


@dataclass(frozen=True)
class ConfidenceInterval:
    """📏 Доверительный интервал для ρ_L или ρ_L,l, обрезанный до [0,1]"""
    lower: float
    upper: float
    level: float
    method: CIMethod
    estimate: float
    lower_truncated: bool = False
    upper_truncated: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise DomainError(f"❌ Некорректный интервал [{self.lower}, {self.upper}]")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _check_level(level: float) -> None:
    if not (math.isfinite(level) and 0.0 < level < 1.0):
        raise DomainError(f"❌ Уровень доверия должен лежать в (0,1), получено {level}")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# =================== АСИМПТОТИЧЕСКИЕ ТЕСТЫ ===================

def _asymptotic_p_value(statistic: float, tau: float = 0.0) -> float:
    """p = 1 - F(t), F - закон max(|U|,|V|) с единичной диагональю"""
    tau = min(max(tau, -TAU_CLAMP), TAU_CLAMP)
    law = LimitLaw(LimitKind.MAX_ABS_PAIR, 1.0, 1.0, tau)
    return float(min(max(1.0 - max_abs_cdf(statistic, law), 0.0), 1.0))


def test_rank_asymptotic(s: Sample) -> TestResult:
    """🧪 Асимптотический тест по ρ̂_L: p = 1 - (2Φ(√n ρ̂_L) - 1)²"""
    statistic = math.sqrt(s.n) * lancaster_rank(s).value
    return TestResult(statistic, _asymptotic_p_value(statistic), TestMethod.RANK_ASYMPTOTIC)


def test_linear_asymptotic(s: Sample, mode: AsymptoticMode = AsymptoticMode.ASSUME_SYMMETRIC) -> TestResult:
    """🧪 Асимптотический тест по ρ̂_L,l при τ = 0 или с оцененным τ̂"""
    if s.n < len(MOMENT_INDEX):
        raise SampleTooSmallError(s.n, len(MOMENT_INDEX))
    statistic = math.sqrt(s.n) * lancaster_linear(s).value
    if mode is AsymptoticMode.ASSUME_SYMMETRIC:
        return TestResult(statistic, _asymptotic_p_value(statistic), TestMethod.LINEAR_ASYMPTOTIC_SYM)
    tau = sigma_star_independence(s).s12
    return TestResult(statistic, _asymptotic_p_value(statistic, tau), TestMethod.LINEAR_ASYMPTOTIC_TAU)


# =================== ПЕРЕСТАНОВКИ ===================

BatchStatistic = Callable[[np.ndarray], np.ndarray]


def _batch_statistic(s: Sample, kind: CoefficientKind, rng: np.random.Generator) -> BatchStatistic:
    """Статистика для пачки перестановок y, массив индексов (B, n)"""
    n = s.n
    if kind is CoefficientKind.LANCASTER_RANK:
        if n < 3:
            raise SampleTooSmallError(n, 3)
        q, r, scores = ranks(s.xs), ranks(s.ys), vdw_scores(n)

        def rank_batch(perm: np.ndarray) -> np.ndarray:
            rho1, rho2 = rank_score_components(q, r[perm], scores)
            return np.maximum(np.abs(rho1), np.abs(rho2))
        return rank_batch

    if kind is CoefficientKind.LANCASTER_LINEAR:
        lancaster_linear(s)  # проверка вырожденного эксцесса
        x, y = standardize(s.xs), standardize(s.ys)
        x2, y2 = x * x, y * y
        norm = math.sqrt((np.mean(x2 * x2) - 1.0) * (np.mean(y2 * y2) - 1.0))

        def linear_batch(perm: np.ndarray) -> np.ndarray:
            rho1 = (y[perm] @ x) / n
            rho2 = ((y2[perm] @ x2) / n - 1.0) / norm
            return np.maximum(np.abs(np.clip(rho1, -1, 1)), np.abs(np.clip(rho2, -1, 1)))
        return linear_batch

    if kind in (CoefficientKind.PEARSON, CoefficientKind.SPEARMAN):
        xv, yv = (s.xs, s.ys) if kind is CoefficientKind.PEARSON else (rankdata(s.xs), rankdata(s.ys))
        x, y = standardize(xv), standardize(yv)

        def correlation_batch(perm: np.ndarray) -> np.ndarray:
            return np.abs((y[perm] @ x) / n)
        return correlation_batch

    def generic_batch(perm: np.ndarray) -> np.ndarray:
        return np.array([evaluate_coefficient(kind, Sample(s.xs, s.ys[row]), rng) for row in perm])
    return generic_batch


def _method_for(kind: CoefficientKind) -> TestMethod:
    if kind is CoefficientKind.LANCASTER_RANK:
        return TestMethod.RANK_PERMUTATION
    if kind is CoefficientKind.LANCASTER_LINEAR:
        return TestMethod.LINEAR_PERMUTATION
    return TestMethod.COMPETITOR_PERMUTATION


def _count_extreme(values: np.ndarray, observed: float) -> int:
    return int(np.count_nonzero(values >= observed - _TIE_RTOL * max(abs(observed), 1.0)))


def test_permutation(s: Sample, kind: CoefficientKind = CoefficientKind.LANCASTER_RANK,
                     n_permutations: int = 1000, seed=None) -> TestResult:
    """🔀 Перестановочный тест: p = (1 + #{T(π) >= T}) / (B + 1)"""
    if n_permutations < 1:
        raise DomainError(f"❌ Число перестановок должно быть >= 1, получено {n_permutations}")
    rng = _rng(seed)
    statistic_of = _batch_statistic(s, kind, rng)
    observed = float(statistic_of(np.arange(s.n)[None, :])[0])

    exceed, done = 0, 0
    while done < n_permutations:
        size = min(_PERMUTATION_BATCH, n_permutations - done)
        perm = rng.permuted(np.tile(np.arange(s.n), (size, 1)), axis=1)
        exceed += _count_extreme(statistic_of(perm), observed)
        done += size

    p_value = (1.0 + exceed) / (n_permutations + 1.0)
    return TestResult(observed, p_value, _method_for(kind), n_permutations,
                      kind if _method_for(kind) is TestMethod.COMPETITOR_PERMUTATION else None)


def test_permutation_exact(s: Sample, kind: CoefficientKind = CoefficientKind.LANCASTER_RANK) -> TestResult:
    """🔀 Точный перестановочный тест полным перебором n! перестановок"""
    if s.n > EXACT_PERMUTATION_MAX_N:
        raise DomainError(f"❌ Полный перебор поддерживается при n <= {EXACT_PERMUTATION_MAX_N}, получено {s.n}")
    statistic_of = _batch_statistic(s, kind, np.random.default_rng(0))
    observed = float(statistic_of(np.arange(s.n)[None, :])[0])

    exceed, total = 0, 0
    iterator = permutations(range(s.n))
    while True:
        block = np.array(list(islice(iterator, _EXACT_BATCH)), dtype=np.int64)
        if block.size == 0:
            break
        exceed += _count_extreme(statistic_of(block), observed)
        total += block.shape[0]

    logger.debug(f"🔀 Перебрано {total} перестановок")
    return TestResult(observed, exceed / total, TestMethod.EXACT_PERMUTATION, total, kind)


# =================== БУТСТРЕП ===================

def _components_batch(xs: np.ndarray, ys: np.ndarray, estimator: EstimatorKind) -> Tuple[np.ndarray, np.ndarray]:
    """(ρ̂₁, ρ̂₂) по строкам; NaN для вырожденных выборок"""
    n = xs.shape[1]
    if estimator is EstimatorKind.RANK:
        # повторы в бутстреп-выборке ранжируются как непрерывная выборка
        q = rankdata(xs, method="ordinal", axis=1).astype(np.int64)
        r = rankdata(ys, method="ordinal", axis=1).astype(np.int64)
        return rank_score_components(q, r, vdw_scores(n))

    x = xs - xs.mean(axis=1, keepdims=True)
    y = ys - ys.mean(axis=1, keepdims=True)
    sx = np.sqrt(np.mean(x * x, axis=1, keepdims=True))
    sy = np.sqrt(np.mean(y * y, axis=1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        x, y = x / sx, y / sy
        x2, y2 = x * x, y * y
        m40, m04 = np.mean(x2 * x2, axis=1), np.mean(y2 * y2, axis=1)
        rho1 = np.mean(x * y, axis=1)
        rho2 = (np.mean(x2 * y2, axis=1) - 1.0) / np.sqrt((m40 - 1.0) * (m04 - 1.0))
    bad = ~(np.isfinite(rho1) & np.isfinite(rho2) & (m40 > 1.0) & (m04 > 1.0))
    rho1[bad], rho2[bad] = np.nan, np.nan
    return np.clip(rho1, -1.0, 1.0), np.clip(rho2, -1.0, 1.0)


def bootstrap_cov(s: Sample, estimator: EstimatorKind = EstimatorKind.LINEAR, n_bootstrap: int = 500,
                  seed=None, max_redraws: int = 10) -> CovMatrix2:
    """🔁 n × выборочная ковариация пар (ρ̂₁, ρ̂₂) по B бутстреп-выборкам"""
    if n_bootstrap < 2:
        raise DomainError(f"❌ Нужно минимум 2 бутстреп-выборки, получено {n_bootstrap}")
    rng = _rng(seed)
    n = s.n
    idx = rng.integers(0, n, size=(n_bootstrap, n))
    rho1, rho2 = _components_batch(s.xs[idx], s.ys[idx], estimator)

    bad = np.flatnonzero(np.isnan(rho1))
    for _ in range(max_redraws):
        if bad.size == 0:
            break
        fresh = rng.integers(0, n, size=(bad.size, n))
        r1, r2 = _components_batch(s.xs[fresh], s.ys[fresh], estimator)
        rho1[bad], rho2[bad] = r1, r2
        bad = bad[np.isnan(r1)]

    if bad.size:
        logger.warning(f"⚠️ Пропущено {bad.size} вырожденных бутстреп-выборок из {n_bootstrap}")
    keep = ~np.isnan(rho1)
    if np.count_nonzero(keep) < 2:
        raise DegenerateSampleError("❌ Недостаточно невырожденных бутстреп-выборок")
    pairs = np.vstack((rho1[keep], rho2[keep]))
    return CovMatrix2.from_array(n * np.atleast_2d(np.cov(pairs, ddof=1)))


# =================== ИНТЕРВАЛЫ ===================

def estimate_for(s: Sample, method: CIMethod) -> LancasterEstimate:
    return lancaster_rank(s) if method.estimator is EstimatorKind.RANK else lancaster_linear(s)


def covariance_for(s: Sample, method: CIMethod, n_bootstrap: int = 500, seed=None,
                   max_redraws: int = 10) -> CovMatrix2:
    """📐 Оценка Σ*: подстановка моментов или бутстреп"""
    if not method.bootstrap:
        if s.n < len(MOMENT_INDEX):
            raise SampleTooSmallError(s.n, len(MOMENT_INDEX))
        return sigma_star(s)
    return bootstrap_cov(s, method.estimator, n_bootstrap, seed, max_redraws)


def interval_from(estimate: LancasterEstimate, cov: CovMatrix2, n: int, method: CIMethod,
                  level: float = 0.95, delta: float = 1e-6) -> ConfidenceInterval:
    """📏 Интервал по оценке и ковариации; δ-подстановка для неположительной дисперсии"""
    _check_level(level)
    cov = cov.regularized(delta)
    alpha = 1.0 - level
    root_n = math.sqrt(n)
    rho = estimate.value

    scale = math.sqrt(cov.s11) if estimate.winner is Component.FIRST else math.sqrt(cov.s22)
    half = float(normal_quantile(1.0 - alpha / 2.0)) * scale / root_n
    if method.conservative:
        kind = LimitKind.MAX_PAIR if estimate.rho1 * estimate.rho2 >= 0.0 else LimitKind.MAX_NEG_PAIR
        lower_raw = rho - limit_quantile(1.0 - alpha / 2.0, LimitLaw.from_cov(kind, cov)) / root_n
    else:
        lower_raw = rho - half
    upper_raw = rho + half

    lower, upper = max(lower_raw, 0.0), min(upper_raw, 1.0)
    return ConfidenceInterval(lower, upper, level, method, rho,
                              lower_truncated=lower_raw < 0.0, upper_truncated=upper_raw > 1.0)


def confidence_interval(s: Sample, method: CIMethod, level: float = 0.95, n_bootstrap: int = 500,
                        seed=None, delta: float = 1e-6, max_redraws: int = 10) -> ConfidenceInterval:
    """📏 Один из шести доверительных интервалов для ρ_L,l или ρ_L"""
    _check_level(level)
    estimate = estimate_for(s, method)
    cov = covariance_for(s, method, n_bootstrap, seed, max_redraws)
    return interval_from(estimate, cov, s.n, method, level, delta)


# имена test_* не должны собираться pytest как тесты
for _op in (test_rank_asymptotic, test_linear_asymptotic, test_permutation, test_permutation_exact):
    _op.__test__ = False
