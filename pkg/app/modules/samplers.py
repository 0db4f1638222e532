#!/usr/bin/env python3
"""
🎲 SAMPLERS v1.0
📦 Генераторы двумерных выборок для исследований

• нормальный закон, смеси NM1-NM3 и MN, t-распределения и Коши
• равномерные законы на круге, ромбе и треугольнике
• GARCH(2,1) пары (r_t, r_{t-1}) и регрессионные модели
"""

import logging
import math
import re
import zlib
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from app.exceptions import ConfigurationError
from app.modules.estimators import Sample

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator, None]

# Метка GARCH(2,1): σ²_t = ω + α r²_{t-1} + β σ²_{t-1}, пара (ω, α) = (0.01, 0.6)
GARCH_OMEGA = 0.01
GARCH_ALPHA = 0.6
GARCH_BETA = 0.2
GARCH_BURN_IN = 1000

_MIXTURE_WEIGHTS = {"1": 1.0 / 2.0, "2": 1.0 / 3.0, "3": 1.0 / 4.0}
_REGRESSION_SIGMAS = {
    "RegLin": (0.3, 0.45),
    "RegQuad": (0.15, 0.3),
    "RegTrig": (0.15, 0.3),
}


class DistributionKind(str, Enum):
    BVN = "bvn"
    NORMAL_MIXTURE = "normal_mixture"
    MN4 = "mn4"
    BVT = "bvt"
    UNIF_DISC = "unif_disc"
    UNIF_RHOMB = "unif_rhomb"
    UNIF_TRIANGLE = "unif_triangle"
    GARCH21 = "garch21"
    REG_LIN = "reg_lin"
    REG_QUAD = "reg_quad"
    REG_TRIG = "reg_trig"


_REGRESSION_KINDS = {
    "RegLin": DistributionKind.REG_LIN,
    "RegQuad": DistributionKind.REG_QUAD,
    "RegTrig": DistributionKind.REG_TRIG,
}


class DistributionSpec(BaseModel):
    """📦 Описание закона: вид, параметры и метка для отчетов"""
    model_config = ConfigDict(frozen=True)

    kind: DistributionKind
    rho: float = 0.0
    p: float = 0.5
    nu: float = 5.0
    sigma: float = 0.3
    name: Optional[str] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "DistributionSpec":
        if self.kind in (DistributionKind.BVN, DistributionKind.BVT) and not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho должен лежать в (-1, 1), получено {self.rho}")
        if self.kind is DistributionKind.NORMAL_MIXTURE and not 0.0 < self.p < 1.0:
            raise ValueError(f"p должен лежать в (0, 1), получено {self.p}")
        if self.kind is DistributionKind.BVT and not (math.isfinite(self.nu) and self.nu > 0.0):
            raise ValueError(f"nu должен быть > 0, получено {self.nu}")
        if self.kind in _REGRESSION_KINDS.values() and not self.sigma > 0.0:
            raise ValueError(f"sigma должен быть > 0, получено {self.sigma}")
        return self

    @property
    def label(self) -> str:
        """Метка закона в отчетах"""
        if self.name:
            return self.name
        kind = self.kind
        if kind is DistributionKind.BVN:
            return f"BVN({self.rho:g})"
        if kind is DistributionKind.BVT:
            return f"BVT{self.nu:g}({self.rho:g})"
        if kind is DistributionKind.NORMAL_MIXTURE:
            return f"NM(p={self.p:g})"
        if kind in _REGRESSION_KINDS.values():
            prefix = next(k for k, v in _REGRESSION_KINDS.items() if v is kind)
            return f"{prefix}(sigma={self.sigma:g})"
        return {
            DistributionKind.MN4: "MN",
            DistributionKind.UNIF_DISC: "UnifDisc",
            DistributionKind.UNIF_RHOMB: "UnifRhomb",
            DistributionKind.UNIF_TRIANGLE: "UnifTriangle",
            DistributionKind.GARCH21: "GARCH(2,1)",
        }[kind]

    @property
    def heavy_tailed(self) -> bool:
        """Закон без четвертых моментов: t-распределения"""
        return self.kind is DistributionKind.BVT


_NUMBER = r"([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)"
_BVN_RE = re.compile(rf"^BVN\({_NUMBER}\)$")
_BVT_RE = re.compile(rf"^BVT{_NUMBER}\({_NUMBER}\)$")
_MIXTURE_RE = re.compile(r"^(?:NM|MN)([123])$")
_REGRESSION_RE = re.compile(r"^(RegLin|RegQuad|RegTrig)([12])$")


def _build(label: str, **fields) -> DistributionSpec:
    try:
        return DistributionSpec(name=label, **fields)
    except ValidationError as e:
        raise ConfigurationError(f"❌ Некорректные параметры закона {label}: {e.errors()[0]['msg']}") from e


def parse_distribution(label: str) -> DistributionSpec:
    """🔎 Разбор метки закона: BVN(0.5), NM1, MN, BVT5(0.2), BVC, UnifDisc, GARCH(2,1), RegQuad1, ..."""
    text = label.strip().replace(" ", "")
    if match := _BVN_RE.match(text):
        return _build(text, kind=DistributionKind.BVN, rho=float(match.group(1)))
    if match := _BVT_RE.match(text):
        return _build(text, kind=DistributionKind.BVT, nu=float(match.group(1)), rho=float(match.group(2)))
    if text == "BVC":
        return _build(text, kind=DistributionKind.BVT, nu=1.0, rho=0.0)
    if match := _MIXTURE_RE.match(text):
        return _build(text, kind=DistributionKind.NORMAL_MIXTURE, p=_MIXTURE_WEIGHTS[match.group(1)])
    if text == "MN":
        return _build(text, kind=DistributionKind.MN4)
    if match := _REGRESSION_RE.match(text):
        prefix, index = match.groups()
        return _build(text, kind=_REGRESSION_KINDS[prefix], sigma=_REGRESSION_SIGMAS[prefix][int(index) - 1])
    simple = {
        "UnifDisc": DistributionKind.UNIF_DISC,
        "UnifRhomb": DistributionKind.UNIF_RHOMB,
        "UnifDrhomb": DistributionKind.UNIF_RHOMB,
        "UnifTriangle": DistributionKind.UNIF_TRIANGLE,
        "GARCH(2,1)": DistributionKind.GARCH21,
        "GARCH": DistributionKind.GARCH21,
    }
    if text in simple:
        return _build(text, kind=simple[text])
    raise ConfigurationError(f"❌ Неизвестный закон: {label!r}")


def stream_rng(seed: int, label: str, rep: int) -> np.random.Generator:
    """🎲 Независимый поток для (seed, закон, номер повторения)"""
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key, rep))))


# =================== ГЕНЕРАТОРЫ ===================

def _gaussian_pair(rng: np.random.Generator, n: int, rho: float) -> Tuple[np.ndarray, np.ndarray]:
    z1, z2 = rng.standard_normal(n), rng.standard_normal(n)
    return z1, rho * z1 + math.sqrt(1.0 - rho * rho) * z2


def _normal_mixture(rng: np.random.Generator, n: int, p: float) -> Tuple[np.ndarray, np.ndarray]:
    z1, z2 = rng.standard_normal(n), rng.standard_normal(n)
    rho = np.where(rng.random(n) < p, -0.5, 0.5)
    return z1, rho * z1 + np.sqrt(1.0 - rho * rho) * z2


def _four_mixture(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    centers = np.array([(0.0, 0.0), (0.0, 5.0), (5.0, 0.0), (5.0, 5.0)])
    chosen = centers[rng.integers(0, 4, size=n)]
    return chosen[:, 0] + rng.standard_normal(n), chosen[:, 1] + rng.standard_normal(n)


def _bivariate_t(rng: np.random.Generator, n: int, nu: float, rho: float) -> Tuple[np.ndarray, np.ndarray]:
    x, y = _gaussian_pair(rng, n, rho)
    w = np.sqrt(rng.chisquare(nu, size=n) / nu)
    return x / w, y / w


def _rejection(rng: np.random.Generator, n: int, low: float, high: float, inside) -> Tuple[np.ndarray, np.ndarray]:
    """Равномерный закон на области inside(x, y) отбором из квадрата [low, high]²"""
    xs, ys, found = [], [], 0
    while found < n:
        size = max(2 * (n - found), 64)
        x, y = rng.uniform(low, high, size), rng.uniform(low, high, size)
        keep = inside(x, y)
        xs.append(x[keep])
        ys.append(y[keep])
        found += int(np.count_nonzero(keep))
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def garch_series(rng: np.random.Generator, length: int, burn_in: int = GARCH_BURN_IN) -> np.ndarray:
    """📈 Траектория GARCH с нормальными инновациями после прогрева"""
    total = length + burn_in
    eps = rng.standard_normal(total)
    r = np.zeros(total)
    variance = GARCH_OMEGA / (1.0 - GARCH_ALPHA - GARCH_BETA)
    previous = 0.0
    for t in range(total):
        variance = GARCH_OMEGA + GARCH_ALPHA * previous * previous + GARCH_BETA * variance
        r[t] = math.sqrt(variance) * eps[t]
        previous = r[t]
    return r[burn_in:]


def _regression(rng: np.random.Generator, n: int, kind: DistributionKind, sigma: float):
    if kind is DistributionKind.REG_LIN:
        x = rng.uniform(0.0, 1.0, n)
        f = x
    elif kind is DistributionKind.REG_QUAD:
        x = rng.uniform(-1.0, 1.0, n)
        f = x * x
    else:
        x = rng.uniform(0.0, 4.0 * math.pi, n)
        f = (np.sin(x) + 1.0) / 2.0
    return x, f + sigma * rng.standard_normal(n)


def draw(spec: DistributionSpec, n: int, seed: SeedLike = None) -> Tuple[np.ndarray, np.ndarray]:
    """🎲 Массивы (xs, ys) объема n из закона spec"""
    if n < 1:
        raise ConfigurationError(f"❌ Объем выборки должен быть >= 1, получено {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    kind = spec.kind

    if kind is DistributionKind.BVN:
        return _gaussian_pair(rng, n, spec.rho)
    if kind is DistributionKind.NORMAL_MIXTURE:
        return _normal_mixture(rng, n, spec.p)
    if kind is DistributionKind.MN4:
        return _four_mixture(rng, n)
    if kind is DistributionKind.BVT:
        return _bivariate_t(rng, n, spec.nu, spec.rho)
    if kind is DistributionKind.UNIF_DISC:
        return _rejection(rng, n, -1.0, 1.0, lambda x, y: x * x + y * y <= 1.0)
    if kind is DistributionKind.UNIF_RHOMB:
        return _rejection(rng, n, -1.0, 1.0, lambda x, y: np.abs(x) + np.abs(y) <= 1.0)
    if kind is DistributionKind.UNIF_TRIANGLE:
        return _rejection(rng, n, 0.0, 1.0, lambda x, y: x + y <= 1.0)
    if kind is DistributionKind.GARCH21:
        r = garch_series(rng, n + 1)
        return r[1:], r[:-1]
    return _regression(rng, n, kind, spec.sigma)


def sample(spec: DistributionSpec, n: int, seed: SeedLike = None) -> Sample:
    """🎲 Выборка объема n; одинаковые (spec, n, seed) дают одинаковый результат"""
    xs, ys = draw(spec, n, seed)
    return Sample(xs, ys)
