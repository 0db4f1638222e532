#!/usr/bin/env python3
"""
📊 ESTIMATORS v1.0
📈 Коэффициенты корреляции Ланкастера и конкуренты

• ранговый ρ̂_L на ван-дер-варденовских метках
• моментный ρ̂_L,l на эмпирически стандартизованных данных
• Пирсон, Спирмен, дистанционная корреляция, ξ Чаттерджи
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Optional

import dcor
import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import rankdata

from app.exceptions import (
    DegenerateKurtosisError,
    DegenerateSampleError,
    DomainError,
    SampleTooSmallError,
)
from app.modules.special_functions import normal_quantile

logger = logging.getLogger(__name__)

WINNER_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Sample:
    """📦 Парная выборка (x_i, y_i), i = 1..n"""
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.ascontiguousarray(self.xs, dtype=float)
        ys = np.ascontiguousarray(self.ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1:
            raise DomainError("❌ Ожидаются одномерные векторы наблюдений")
        if xs.shape != ys.shape:
            raise DomainError(f"❌ Длины не совпадают: {xs.size} и {ys.size}")
        if xs.size < 2:
            raise SampleTooSmallError(xs.size, 2)
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DomainError("❌ Выборка содержит бесконечные значения или NaN")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    def swapped(self) -> "Sample":
        return Sample(self.ys, self.xs)

    def with_ys(self, ys: np.ndarray) -> "Sample":
        return Sample(self.xs, ys)


class Component(str, Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class LancasterEstimate:
    """📊 Компоненты (ρ̂₁, ρ̂₂), их максимум по модулю и победитель"""
    rho1: float
    rho2: float
    value: float
    winner: Component
    ties: bool = False

    @classmethod
    def from_components(cls, rho1: float, rho2: float, ties: bool = False) -> "LancasterEstimate":
        rho1 = float(min(max(rho1, -1.0), 1.0))
        rho2 = float(min(max(rho2, -1.0), 1.0))
        # равенство модулей с точностью до округления -> первая компонента
        winner = Component.FIRST if abs(rho1) >= abs(rho2) - WINNER_TOLERANCE else Component.SECOND
        return cls(rho1, rho2, max(abs(rho1), abs(rho2)), winner, ties)


@dataclass(frozen=True)
class ScoreSet:
    """🏷️ Метки a(j) = Φ⁻¹(j/(n+1)), b(j) = a(j)² и их моменты"""
    a: np.ndarray
    b: np.ndarray
    a_bar: float
    b_bar: float
    s_a2: float
    s_b2: float

    @property
    def n(self) -> int:
        return int(self.a.size)


def ranks(v: ArrayLike) -> np.ndarray:
    """🔢 Ранги #{j : v_j <= v_i}; при совпадениях общий максимальный ранг"""
    v = np.asarray(v, dtype=float)
    if v.size < 1:
        raise SampleTooSmallError(0, 1)
    return rankdata(v, method="max").astype(np.int64)


def has_ties(v: np.ndarray) -> bool:
    return np.unique(v).size < v.size


@lru_cache(maxsize=64)
def vdw_scores(n: int) -> ScoreSet:
    """🏷️ Ван-дер-варденовские метки для объема n (кэшируются по n)"""
    if n < 2:
        raise SampleTooSmallError(n, 2)
    a = np.asarray(normal_quantile(np.arange(1, n + 1) / (n + 1.0)), dtype=float)
    b = a * a
    a_bar = float(a.mean())
    b_bar = float(b.mean())
    s_a2 = float(np.mean((a - a_bar) ** 2))
    s_b2 = float(np.mean((b - b_bar) ** 2))
    a.setflags(write=False)
    b.setflags(write=False)
    return ScoreSet(a=a, b=b, a_bar=a_bar, b_bar=b_bar, s_a2=s_a2, s_b2=s_b2)


def rank_score_components(q: np.ndarray, r: np.ndarray, scores: ScoreSet):
    """Числители и знаменатели ρ̂_R1, ρ̂_R2 для рангов q, r (массивы (..., n) допустимы)"""
    n = scores.n
    a_q, a_r = scores.a[q - 1], scores.a[r - 1]
    b_q, b_r = scores.b[q - 1] - scores.b_bar, scores.b[r - 1] - scores.b_bar
    rho1 = np.sum(a_q * a_r, axis=-1) / (n * scores.s_a2)
    rho2 = np.sum(b_q * b_r, axis=-1) / (n * scores.s_b2)
    return rho1, rho2


def lancaster_rank(s: Sample) -> LancasterEstimate:
    """📊 Ранговый коэффициент Ланкастера ρ̂_L = max(|ρ̂_R1|, |ρ̂_R2|)"""
    if s.n < 3:
        raise SampleTooSmallError(s.n, 3)
    ties = has_ties(s.xs) or has_ties(s.ys)
    if ties:
        logger.warning("⚠️ В выборке есть совпадения: асимптотика ρ̂_L не гарантирована")
    rho1, rho2 = rank_score_components(ranks(s.xs), ranks(s.ys), vdw_scores(s.n))
    return LancasterEstimate.from_components(float(rho1), float(rho2), ties=ties)


def standardize(v: np.ndarray) -> np.ndarray:
    """📏 Эмпирическая стандартизация (v - m)/s с делителем n"""
    centered = v - v.mean()
    sd = math.sqrt(float(np.mean(centered * centered)))
    if sd <= 0.0 or not math.isfinite(sd):
        raise DegenerateSampleError("❌ Нулевая выборочная дисперсия")
    return centered / sd


def lancaster_linear(s: Sample) -> LancasterEstimate:
    """📊 Моментный коэффициент Ланкастера ρ̂_L,l = max(|ρ̂_l1|, |ρ̂_l2|)"""
    if s.n < 3:
        raise SampleTooSmallError(s.n, 3)
    x, y = standardize(s.xs), standardize(s.ys)
    x2, y2 = x * x, y * y
    m40, m04 = float(np.mean(x2 * x2)), float(np.mean(y2 * y2))
    if m40 <= 1.0 or m04 <= 1.0:
        raise DegenerateKurtosisError(f"❌ Вырожденный эксцесс: m40={m40:.6g}, m04={m04:.6g}")
    rho1 = float(np.mean(x * y))
    rho2 = (float(np.mean(x2 * y2)) - 1.0) / math.sqrt((m40 - 1.0) * (m04 - 1.0))
    return LancasterEstimate.from_components(rho1, rho2)


def pearson(s: Sample) -> float:
    """📈 Выборочная корреляция Пирсона"""
    if s.n < 3:
        raise SampleTooSmallError(s.n, 3)
    x, y = s.xs - s.xs.mean(), s.ys - s.ys.mean()
    denominator = math.sqrt(float(np.dot(x, x)) * float(np.dot(y, y)))
    if denominator <= 0.0:
        raise DegenerateSampleError("❌ Корреляция Пирсона не определена: нулевая дисперсия")
    return float(min(max(np.dot(x, y) / denominator, -1.0), 1.0))


def spearman(s: Sample) -> float:
    """📈 Корреляция Спирмена: Пирсон средних рангов"""
    return pearson(Sample(rankdata(s.xs), rankdata(s.ys)))


def distance_correlation(s: Sample) -> float:
    """📏 Смещенная выборочная дистанционная корреляция dCor"""
    value = dcor.distance_correlation(s.xs, s.ys)
    return float(min(max(value, 0.0), 1.0))


def xi_coefficient(s: Sample, rng: Optional[np.random.Generator] = None) -> float:
    """🔗 ξ-коэффициент Чаттерджи; совпадения по x разбиваются случайно"""
    rng = rng if rng is not None else np.random.default_rng(0)
    n = s.n
    order = np.lexsort((rng.random(n), s.xs))
    y_sorted = s.ys[order]
    r = rankdata(y_sorted, method="max")
    numerator = float(np.sum(np.abs(np.diff(r))))
    if not has_ties(s.ys):
        return 1.0 - 3.0 * numerator / (n * n - 1.0)
    # общая формула при совпадениях по y
    l_counts = n - rankdata(y_sorted, method="min") + 1
    denominator = 2.0 * float(np.sum(l_counts * (n - l_counts)))
    if denominator <= 0.0:
        raise DegenerateSampleError("❌ ξ не определен: y постоянен")
    return 1.0 - n * numerator / denominator


class CoefficientKind(str, Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"
    LANCASTER_LINEAR = "lancaster_linear"
    LANCASTER_RANK = "lancaster_rank"
    DCOR = "dcor"
    XI = "xi"


def evaluate_coefficient(kind: CoefficientKind, s: Sample,
                         rng: Optional[np.random.Generator] = None) -> float:
    """🧮 Значение коэффициента по идентификатору"""
    if kind is CoefficientKind.LANCASTER_RANK:
        return lancaster_rank(s).value
    if kind is CoefficientKind.LANCASTER_LINEAR:
        return lancaster_linear(s).value
    if kind is CoefficientKind.XI:
        return xi_coefficient(s, rng)
    return _SIMPLE_COEFFICIENTS[kind](s)


_SIMPLE_COEFFICIENTS: Dict[CoefficientKind, Callable[[Sample], float]] = {
    CoefficientKind.PEARSON: pearson,
    CoefficientKind.SPEARMAN: spearman,
    CoefficientKind.DCOR: distance_correlation,
}
