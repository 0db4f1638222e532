#!/usr/bin/env python3
"""
📐 ASYMPTOTICS v1.0
🔬 Асимптотическая теория коэффициентов Ланкастера

• ковариация 12 моментов Σ_m, якобианы A и B, Σ* = M Σ_m Mᵀ, M = B·A
• замкнутая форма Σ* для двумерного нормального закона
• предельные законы max(U,V), max(-U,V), max(|U|,|V|) и их квантили
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import comb, factorial2

from app.exceptions import (
    DegenerateKurtosisError,
    DomainError,
    SampleTooSmallError,
    SingularCorrelationError,
)
from app.modules.estimators import Sample, standardize
from app.modules.special_functions import (
    SkewNormalParams,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    skew_normal_cdf,
    skew_normal_pdf,
)

logger = logging.getLogger(__name__)

# Порядок моментов в Σ_m, A и векторе g
MOMENT_INDEX: Tuple[Tuple[int, int], ...] = (
    (1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (3, 0),
    (0, 3), (2, 1), (1, 2), (4, 0), (0, 4), (2, 2),
)
MAX_ORDER = 8
TAU_CLAMP = 1.0 - 1e-12
_STANDARDIZATION_TOL = 1e-8


@dataclass(frozen=True)
class MomentSet:
    """📐 Стандартизованные моменты e_kl = E[X̆^k Y̆^l] до порядка 8"""
    e: Dict[Tuple[int, int], float]

    def __post_init__(self):
        for key, expected in (((0, 0), 1.0), ((1, 0), 0.0), ((0, 1), 0.0), ((2, 0), 1.0), ((0, 2), 1.0)):
            if abs(self.e.get(key, math.nan) - expected) > _STANDARDIZATION_TOL:
                raise DomainError(f"❌ Моменты не стандартизованы: e{key} = {self.e.get(key)}")
        if not all(math.isfinite(v) for v in self.e.values()):
            raise DomainError("❌ Моменты должны быть конечными")

    def __getitem__(self, key: Tuple[int, int]) -> float:
        return self.e[key]

    @property
    def rho1(self) -> float:
        return self.e[(1, 1)]

    @property
    def rho2(self) -> float:
        return (self.e[(2, 2)] - 1.0) / math.sqrt(_excess(self.e[(4, 0)]) * _excess(self.e[(0, 4)]))


@dataclass(frozen=True)
class CovMatrix2:
    """📐 Симметричная 2×2 ковариация √n(ρ̂₁, ρ̂₂)"""
    s11: float
    s12: float
    s22: float

    @classmethod
    def from_array(cls, m: np.ndarray) -> "CovMatrix2":
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())

    def is_valid(self, tol: float = 1e-9) -> bool:
        return self.s11 >= 0.0 and self.s22 >= 0.0 and self.s12 ** 2 <= self.s11 * self.s22 + tol

    def regularized(self, delta: float) -> "CovMatrix2":
        """Неположительная диагональ -> δ, а ковариация -> 0"""
        if self.s11 > 0.0 and self.s22 > 0.0:
            return self
        return CovMatrix2(self.s11 if self.s11 > 0.0 else delta, 0.0, self.s22 if self.s22 > 0.0 else delta)

    @property
    def tau(self) -> float:
        return self.s12 / math.sqrt(self.s11 * self.s22)


class LimitKind(str, Enum):
    NORMAL1 = "normal1"
    NORMAL2 = "normal2"
    MAX_PAIR = "max_pair"
    MAX_NEG_PAIR = "max_neg_pair"
    MAX_ABS_PAIR = "max_abs_pair"


@dataclass(frozen=True)
class LimitLaw:
    """🎯 Предельный закон √n(ρ̂ - ρ): вид и параметры (σ₁, σ₂, τ)"""
    kind: LimitKind
    sigma1: float = 1.0
    sigma2: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"❌ {name} должен быть > 0, получено {value}")
        if not (math.isfinite(self.tau) and -1.0 <= self.tau <= 1.0):
            raise DomainError(f"❌ tau должен лежать в [-1, 1], получено {self.tau}")

    @classmethod
    def from_cov(cls, kind: LimitKind, cov: CovMatrix2) -> "LimitLaw":
        sigma1, sigma2 = math.sqrt(cov.s11), math.sqrt(cov.s22)
        tau = min(max(cov.s12 / (sigma1 * sigma2), -TAU_CLAMP), TAU_CLAMP)
        return cls(kind, sigma1, sigma2, tau)


def _excess(e4: float) -> float:
    if e4 <= 1.0:
        raise DegenerateKurtosisError(f"❌ Четвертый момент {e4:.6g} <= 1")
    return e4 - 1.0


# =================== МОМЕНТЫ ===================

def sample_moments(s: Sample, order: int = MAX_ORDER) -> MomentSet:
    """📐 Эмпирические e_kl эмпирически стандартизованной выборки"""
    x, y = standardize(s.xs), standardize(s.ys)
    x_pow = [np.ones_like(x)]
    y_pow = [np.ones_like(y)]
    for _ in range(order):
        x_pow.append(x_pow[-1] * x)
        y_pow.append(y_pow[-1] * y)
    e = {
        (k, l): float(np.mean(x_pow[k] * y_pow[l]))
        for k, l in product(range(order + 1), repeat=2) if k + l <= order
    }
    # стандартизация точна по построению
    e[(0, 0)], e[(2, 0)], e[(0, 2)] = 1.0, 1.0, 1.0
    e[(1, 0)], e[(0, 1)] = 0.0, 0.0
    return MomentSet(e)


def _normal_moment(k: int) -> float:
    return 0.0 if k % 2 else float(factorial2(k - 1, exact=True)) if k > 0 else 1.0


def bivariate_normal_moments(rho: float, order: int = MAX_ORDER) -> MomentSet:
    """📐 Аналитические e_kl стандартного двумерного нормального закона, Y = ρX + √(1-ρ²)Z"""
    if not -1.0 < rho < 1.0:
        raise DomainError(f"❌ rho должен лежать в (-1, 1), получено {rho}")
    c = math.sqrt(1.0 - rho * rho)
    e = {}
    for k, l in product(range(order + 1), repeat=2):
        if k + l > order:
            continue
        e[(k, l)] = sum(
            comb(l, i, exact=True) * rho ** i * c ** (l - i)
            * _normal_moment(k + i) * _normal_moment(l - i)
            for i in range(l + 1)
        )
    return MomentSet(e)


def moment_cov_from_moments(m: MomentSet) -> np.ndarray:
    """📐 Σ_m: c_kl,sr = e_(k+s)(l+r) - e_kl e_sr в порядке MOMENT_INDEX"""
    size = len(MOMENT_INDEX)
    sigma = np.empty((size, size))
    for i, (k, l) in enumerate(MOMENT_INDEX):
        for j, (s, r) in enumerate(MOMENT_INDEX):
            sigma[i, j] = m[(k + s, l + r)] - m[(k, l)] * m[(s, r)]
    return 0.5 * (sigma + sigma.T)


def moment_cov_matrix(s: Sample) -> np.ndarray:
    """📐 Эмпирическая Σ_m по стандартизованной выборке"""
    if s.n < len(MOMENT_INDEX):
        raise SampleTooSmallError(s.n, len(MOMENT_INDEX))
    return moment_cov_from_moments(sample_moments(s))


# =================== Δ-МЕТОД ===================

def moment_map_g(v: Sequence[float]) -> np.ndarray:
    """g: (m10, ..., m22) -> (s_x², s_y², s_xy, m̆40, m̆04, m̆22)"""
    m10, m01, m20, m02, m11, m30, m03, m21, m12, m40, m04, m22 = v
    sx2 = m20 - m10 ** 2
    sy2 = m02 - m01 ** 2
    sxy = m11 - m10 * m01
    b40 = (m40 - 4 * m30 * m10 + 6 * m20 * m10 ** 2 - 3 * m10 ** 4) / sx2 ** 2
    b04 = (m04 - 4 * m03 * m01 + 6 * m02 * m01 ** 2 - 3 * m01 ** 4) / sy2 ** 2
    b22 = (m22 - 2 * m21 * m01 - 2 * m12 * m10 + m20 * m01 ** 2 + m10 ** 2 * m02
           + 4 * m11 * m10 * m01 - 3 * m10 ** 2 * m01 ** 2) / (sx2 * sy2)
    return np.array([sx2, sy2, sxy, b40, b04, b22])


def moment_map_h(v: Sequence[float]) -> np.ndarray:
    """h: (s_x², s_y², s_xy, m̆40, m̆04, m̆22) -> (ρ₁, ρ₂)"""
    sx2, sy2, sxy, b40, b04, b22 = v
    return np.array([sxy / math.sqrt(sx2 * sy2), (b22 - 1.0) / math.sqrt((b40 - 1.0) * (b04 - 1.0))])


def moment_point(m: MomentSet) -> np.ndarray:
    """Точка (0, 0, 1, 1, ρ, e30, ..., e22), в которой берутся якобианы"""
    return np.array([m[key] for key in MOMENT_INDEX])


def matrix_A(m: MomentSet) -> np.ndarray:
    """📐 A = Dg в стандартизованной точке, 6×12"""
    a = np.zeros((6, 12))
    a[0, 2] = a[1, 3] = a[2, 4] = 1.0
    a[3, 0], a[3, 2], a[3, 9] = -4.0 * m[(3, 0)], -2.0 * m[(4, 0)], 1.0
    a[4, 1], a[4, 3], a[4, 10] = -4.0 * m[(0, 3)], -2.0 * m[(0, 4)], 1.0
    a[5, 0], a[5, 1] = -2.0 * m[(1, 2)], -2.0 * m[(2, 1)]
    a[5, 2] = a[5, 3] = -m[(2, 2)]
    a[5, 11] = 1.0
    return a


def matrix_B(m: MomentSet, rho1: float, rho2: float) -> np.ndarray:
    """📐 B = Dh в точке g(...), 2×6"""
    k40, k04 = _excess(m[(4, 0)]), _excess(m[(0, 4)])
    b = np.zeros((2, 6))
    b[0, 0] = b[0, 1] = -rho1 / 2.0
    b[0, 2] = 1.0
    b[1, 3] = -rho2 / (2.0 * k40)
    b[1, 4] = -rho2 / (2.0 * k04)
    b[1, 5] = 1.0 / math.sqrt(k40 * k04)
    return b


def sigma_star_from_moments(m: MomentSet) -> CovMatrix2:
    """📐 Σ* = M Σ_m Mᵀ, M = B·A"""
    jacobian = matrix_B(m, m.rho1, m.rho2) @ matrix_A(m)
    return CovMatrix2.from_array(jacobian @ moment_cov_from_moments(m) @ jacobian.T)


def sigma_star(s: Sample) -> CovMatrix2:
    """📐 Подстановочная оценка Σ* по эмпирическим моментам"""
    if s.n < len(MOMENT_INDEX):
        raise SampleTooSmallError(s.n, len(MOMENT_INDEX))
    return sigma_star_from_moments(sample_moments(s))


def sigma_star_11_scalar(m: MomentSet) -> float:
    """Σ*₁₁ = (e40 + e04 + 2e22)ρ²/4 - (e31 + e13)ρ + e22, ρ = e11"""
    rho = m.rho1
    return ((m[(4, 0)] + m[(0, 4)] + 2 * m[(2, 2)]) * rho ** 2 / 4.0
            - (m[(3, 1)] + m[(1, 3)]) * rho + m[(2, 2)])


def sigma_star_bivariate_normal(rho: float) -> CovMatrix2:
    """📐 Замкнутая форма Σ* при двумерной нормальности"""
    q = (1.0 - rho * rho) ** 2
    return CovMatrix2(q, 2.0 * rho * q, q * (3.0 * rho ** 4 + 10.0 * rho ** 2 + 1.0))


def sigma_star_independence(s: Sample) -> CovMatrix2:
    """📐 Σ* при независимости: единичная диагональ, τ = e30 e03 / √((e40-1)(e04-1))"""
    m = sample_moments(s, order=4)
    tau = m[(3, 0)] * m[(0, 3)] / math.sqrt(_excess(m[(4, 0)]) * _excess(m[(0, 4)]))
    return CovMatrix2(1.0, tau, 1.0)


# =================== ПРЕДЕЛЬНЫЕ ЗАКОНЫ ===================

def _shapes(law: LimitLaw, tau: float) -> Tuple[float, float, float]:
    root = math.sqrt(1.0 - tau * tau)
    return law.sigma1 / law.sigma2, law.sigma2 / law.sigma1, root


def _signed_tau(law: LimitLaw) -> float:
    return -law.tau if law.kind is LimitKind.MAX_NEG_PAIR else law.tau


def _require_nonsingular(tau: float) -> None:
    if abs(tau) >= 1.0:
        raise SingularCorrelationError(f"❌ |tau| = {abs(tau)}: плотность не существует")


def max_pair_cdf(z: float, law: LimitLaw) -> float:
    """🎯 P(max(U,V) <= z) как смесь двух скошенно-нормальных; max(-U,V) через τ -> -τ"""
    tau = _signed_tau(law)
    if tau == 0.0:
        return float(normal_cdf(z / law.sigma1) * normal_cdf(z / law.sigma2))
    tau = min(max(tau, -TAU_CLAMP), TAU_CLAMP)
    r12, r21, root = _shapes(law, tau)
    first = skew_normal_cdf(z, SkewNormalParams(law.sigma1, (r12 - tau) / root))
    second = skew_normal_cdf(z, SkewNormalParams(law.sigma2, (r21 - tau) / root))
    return float(min(max(0.5 * (first + second), 0.0), 1.0))


def max_pair_pdf(z: float, law: LimitLaw) -> float:
    """🎯 Плотность max(U,V): ½g(z;σ₁,α₁) + ½g(z;σ₂,α₂)"""
    tau = _signed_tau(law)
    _require_nonsingular(tau)
    r12, r21, root = _shapes(law, tau)
    first = skew_normal_pdf(z, SkewNormalParams(law.sigma1, (r12 - tau) / root))
    second = skew_normal_pdf(z, SkewNormalParams(law.sigma2, (r21 - tau) / root))
    return float(0.5 * (first + second))


def max_pair_cdf_quadrature(z: float, law: LimitLaw) -> float:
    """🔍 Контроль: ∫_{-∞}^z φ(t;0,σ₁²) Φ((z - τσ₂t/σ₁)/(σ₂√(1-τ²))) dt"""
    tau = min(max(_signed_tau(law), -TAU_CLAMP), TAU_CLAMP)
    s1, s2 = law.sigma1, law.sigma2
    lower = -12.0 * s1
    if z <= lower:
        return 0.0
    root = math.sqrt(1.0 - tau * tau)
    value, _ = integrate.quad(
        lambda t: normal_pdf(t / s1) / s1 * normal_cdf((z - tau * s2 * t / s1) / (s2 * root)),
        lower, z, epsabs=1e-12, epsrel=1e-12, limit=200,
    )
    return float(value)


def max_abs_cdf(z: float, law: LimitLaw) -> float:
    """🎯 P(max(|U|,|V|) <= z) через четыре скошенно-нормальные функции распределения"""
    if z < 0.0:
        raise DomainError(f"❌ max(|U|,|V|) определен только для z >= 0, получено {z}")
    _require_nonsingular(law.tau)
    s1, s2, tau = law.sigma1, law.sigma2, law.tau
    if tau == 0.0:
        return float((2.0 * normal_cdf(z / s1) - 1.0) * (2.0 * normal_cdf(z / s2) - 1.0))
    r12, r21, root = _shapes(law, tau)
    total = 0.0
    for scale, ratio in ((s1, r12), (s2, r21)):
        minus = SkewNormalParams(scale, (ratio - tau) / root)
        plus = SkewNormalParams(scale, (ratio + tau) / root)
        total += (skew_normal_cdf(z, minus) - skew_normal_cdf(0.0, minus)
                  - skew_normal_cdf(0.0, plus) + skew_normal_cdf(-z, plus))
    return float(min(max(total, 0.0), 1.0))


def max_abs_pdf(z: float, law: LimitLaw) -> float:
    """🎯 Плотность max(|U|,|V|) при z >= 0"""
    if z < 0.0:
        raise DomainError(f"❌ max(|U|,|V|) определен только для z >= 0, получено {z}")
    _require_nonsingular(law.tau)
    s1, s2, tau = law.sigma1, law.sigma2, law.tau
    r12, r21, root = _shapes(law, tau)
    total = 0.0
    for scale, ratio in ((s1, r12), (s2, r21)):
        total += (skew_normal_pdf(z, SkewNormalParams(scale, (ratio - tau) / root))
                  - skew_normal_pdf(-z, SkewNormalParams(scale, (ratio + tau) / root)))
    return float(max(total, 0.0))


def max_abs_cdf_quadrature(z: float, law: LimitLaw) -> float:
    """🔍 Контроль: 2∫_0^z φ(t;0,σ₁²)(Φ(a₊(t)) - Φ(a₋(t))) dt"""
    if z <= 0.0:
        return 0.0
    _require_nonsingular(law.tau)
    s1, s2, tau = law.sigma1, law.sigma2, law.tau
    root = math.sqrt(1.0 - tau * tau)

    def integrand(t: float) -> float:
        shift = tau * s2 * t / s1
        return normal_pdf(t / s1) / s1 * (normal_cdf((z - shift) / (s2 * root))
                                          - normal_cdf((-z - shift) / (s2 * root)))

    value, _ = integrate.quad(integrand, 0.0, z, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(2.0 * value)


def limit_law_cdf(z: float, law: LimitLaw) -> float:
    """🎯 Функция распределения предельного закона любого вида"""
    if law.kind is LimitKind.NORMAL1:
        return float(normal_cdf(z / law.sigma1))
    if law.kind is LimitKind.NORMAL2:
        return float(normal_cdf(z / law.sigma2))
    if law.kind is LimitKind.MAX_ABS_PAIR:
        return 0.0 if z < 0.0 else max_abs_cdf(z, law)
    return max_pair_cdf(z, law)


def limit_law_pdf(z: float, law: LimitLaw) -> float:
    """🎯 Плотность предельного закона любого вида"""
    if law.kind is LimitKind.NORMAL1:
        return float(normal_pdf(z / law.sigma1)) / law.sigma1
    if law.kind is LimitKind.NORMAL2:
        return float(normal_pdf(z / law.sigma2)) / law.sigma2
    if law.kind is LimitKind.MAX_ABS_PAIR:
        return 0.0 if z < 0.0 else max_abs_pdf(z, law)
    return max_pair_pdf(z, law)


def limit_quantile(p: float, law: LimitLaw) -> float:
    """🎯 p-квантиль предельного закона: скобочный поиск корня"""
    if not 0.0 < p < 1.0:
        raise DomainError(f"❌ p должен лежать в (0,1), получено {p}")
    if law.kind is LimitKind.NORMAL1:
        return law.sigma1 * float(normal_quantile(p))
    if law.kind is LimitKind.NORMAL2:
        return law.sigma2 * float(normal_quantile(p))

    width = 10.0 * max(law.sigma1, law.sigma2)
    lower = 0.0 if law.kind is LimitKind.MAX_ABS_PAIR else -width
    upper = width
    while limit_law_cdf(upper, law) < p:
        upper *= 2.0
    while law.kind is not LimitKind.MAX_ABS_PAIR and limit_law_cdf(lower, law) > p:
        lower *= 2.0
    return float(optimize.brentq(lambda z: limit_law_cdf(z, law) - p, lower, upper,
                                 xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500))


def select_limit_law(rho1: float, rho2: float, cov: CovMatrix2, tol: float = 0.0) -> LimitLaw:
    """🎯 Выбор случая предельной теоремы по (ρ₁, ρ₂)"""
    a1, a2 = abs(rho1), abs(rho2)
    if a1 > a2 + tol:
        kind = LimitKind.NORMAL1
    elif a2 > a1 + tol:
        kind = LimitKind.NORMAL2
    elif max(a1, a2) <= tol:
        kind = LimitKind.MAX_ABS_PAIR
    elif rho1 * rho2 >= 0.0:
        kind = LimitKind.MAX_PAIR
    else:
        kind = LimitKind.MAX_NEG_PAIR
    return LimitLaw.from_cov(kind, cov)
