#!/usr/bin/env python3
"""
📐 SPECIAL FUNCTIONS v1.0
🔢 Стандартное нормальное и скошенно-нормальное распределения

Все функции чистые и потокобезопасные, принимают скаляр или массив.
Для скаляра возвращается float.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate, special

from app.exceptions import DomainError

logger = logging.getLogger(__name__)

FloatOrArray = Union[float, np.ndarray]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _out(value: np.ndarray) -> FloatOrArray:
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class SkewNormalParams:
    """📐 Параметры SN(0, σ, α): масштаб и форма"""
    scale: float
    shape: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DomainError(f"❌ Масштаб должен быть > 0, получено {self.scale}")
        if not math.isfinite(self.shape):
            raise DomainError(f"❌ Параметр формы должен быть конечным, получено {self.shape}")


def normal_pdf(z: ArrayLike) -> FloatOrArray:
    """📈 Плотность N(0,1)"""
    z = np.asarray(z, dtype=float)
    return _out(_INV_SQRT_2PI * np.exp(-0.5 * z * z))


def normal_cdf(z: ArrayLike) -> FloatOrArray:
    """📈 Функция распределения N(0,1), точность ~1e-16 через erfc"""
    return _out(special.ndtr(np.asarray(z, dtype=float)))


def normal_quantile(p: ArrayLike) -> FloatOrArray:
    """📉 Квантиль N(0,1), p строго в (0,1)"""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("❌ Квантиль нормального закона определен только для p в (0,1)")
    return _out(special.ndtri(p))


def skew_normal_pdf(z: ArrayLike, params: SkewNormalParams) -> FloatOrArray:
    """📐 g(z; σ, α) = (2/σ) φ(z/σ) Φ(α z/σ)"""
    u = np.asarray(z, dtype=float) / params.scale
    value = 2.0 / params.scale * _INV_SQRT_2PI * np.exp(-0.5 * u * u) * special.ndtr(params.shape * u)
    return _out(value)


def skew_normal_cdf(z: ArrayLike, params: SkewNormalParams) -> FloatOrArray:
    """📐 Функция распределения SN(0, σ, α) = Φ(z/σ) - 2 T(z/σ, α)"""
    u = np.asarray(z, dtype=float) / params.scale
    value = special.ndtr(u) - 2.0 * special.owens_t(u, params.shape)
    # на ±∞ owens_t дает 0 / 0-предел, фиксируем массу явно
    value = np.where(np.isposinf(u), 1.0, np.where(np.isneginf(u), 0.0, value))
    return _out(np.clip(value, 0.0, 1.0))


def skew_normal_cdf_quadrature(z: float, params: SkewNormalParams, tol: float = 1e-11) -> float:
    """🔍 Контрольный расчет функции распределения SN квадратурой плотности"""
    if math.isinf(z):
        return 1.0 if z > 0 else 0.0
    lower = -40.0 * params.scale
    if z <= lower:
        return 0.0
    value, _ = integrate.quad(
        lambda t: skew_normal_pdf(t, params), lower, z,
        epsabs=tol, epsrel=tol, limit=200, points=[0.0] if lower < 0.0 < z else None,
    )
    return float(min(max(value, 0.0), 1.0))
