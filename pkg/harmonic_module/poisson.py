import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from harmonic_module.boundary import BoundaryFunction, constant
from leafgeom_module.sector_chart import SectorChart, EDGE_TOL, to_halfplane

logger = get_logger()


@dataclass(frozen=True)
class HalfPlanePoint:
    """Точка верхней полуплоскости U + iV, V > 0"""
    U: float
    V: float

    def __post_init__(self):
        if not self.V > 0:
            raise LabError("on-boundary", f"V = {self.V} is not positive")

    @classmethod
    def of(cls, point: Union["HalfPlanePoint", Tuple[float, float], complex]) -> "HalfPlanePoint":
        if isinstance(point, cls):
            return point
        if isinstance(point, complex):
            return cls(point.real, point.imag)
        u, v = point
        return cls(float(u), float(v))


def _quad_settings(epsabs, epsrel, limit):
    cfg = get_config().harmonic
    return (cfg.epsabs if epsabs is None else epsabs,
            cfg.epsrel if epsrel is None else epsrel,
            cfg.limit if limit is None else limit)


def poisson_extend_with_error(H: BoundaryFunction, point, epsabs: Optional[float] = None,
                              epsrel: Optional[float] = None, limit: Optional[int] = None) -> Tuple[float, float]:
    """
    Интеграл Пуассона (1/π)∫H̃(x) V/(V² + (x − U)²) dx и оценка его погрешности.

    Замена x = U + V·tan(s) переводит ядро в постоянную плотность 1/π на (−π/2, π/2),
    поэтому точность не деградирует при малых V.

    Raises:
        LabError("divergent-boundary-data"): хвост растет как |x|^q, q ≥ 1
    """
    p = HalfPlanePoint.of(point)
    if H.decay <= -1:
        raise LabError("divergent-boundary-data",
                       f"{H.description}: tail |x|^{-H.decay:g} is not Poisson integrable")
    epsabs, epsrel, limit = _quad_settings(epsabs, epsrel, limit)

    def integrand(s):
        return float(H(p.U + p.V * math.tan(s)))

    half = math.pi / 2
    points = sorted({math.atan((b - p.U) / p.V) for b in H.breakpoints if np.isfinite(b)})
    points = [s for s in points if -half < s < half]
    value, error = integrate.quad(integrand, -half, half, points=points or None,
                                  epsabs=epsabs, epsrel=epsrel, limit=limit)
    value, error = value / math.pi, error / math.pi
    if error > 1e-8 * (1 + abs(value)):
        logger.warning(f"Интеграл Пуассона {H.description} в ({p.U:.6g}, {p.V:.6g}): "
                       f"оценка погрешности {error:.3g}")
    if value < -max(error, epsabs):
        raise LabError("divergent-boundary-data", f"negative Poisson integral {value:.3g} for nonnegative data")
    return max(value, 0.0), error


def poisson_extend(H: BoundaryFunction, point, **kwargs) -> float:
    return poisson_extend_with_error(H, point, **kwargs)[0]


def kernel_mass(point, **kwargs) -> float:
    """Масса ядра Пуассона той же квадратурой (должна быть 1)"""
    return poisson_extend(constant(1.0), point, **kwargs)


def weighted_norm(H: BoundaryFunction, gamma: float, epsabs: Optional[float] = None,
                  epsrel: Optional[float] = None, limit: Optional[int] = None) -> float:
    """
    Весовая норма ∫H̃(x)(|x| + 1)^{1/γ − 1} dx.

    Raises:
        LabError("config"): γ ≤ 1
        LabError("divergent-boundary-data"): показатель хвоста p ≤ 1/γ
    """
    if not gamma > 1:
        raise LabError("config", f"weighted norm needs γ > 1, got {gamma}")
    power = 1 / gamma - 1
    if H.decay <= 1 / gamma:
        raise LabError("divergent-boundary-data",
                       f"{H.description}: tail exponent {H.decay:g} ≤ 1/γ = {1 / gamma:.6g}")
    epsabs, epsrel, limit = _quad_settings(epsabs, epsrel, limit)

    def integrand(x):
        return float(H(x)) * (abs(x) + 1) ** power

    lo, hi = H.support()
    cuts = sorted({b for b in H.breakpoints if lo < b < hi} | ({0.0} if lo < 0 < hi else set()))
    edges = [lo] + cuts + [hi]
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        if right <= left:
            continue
        value, _ = integrate.quad(integrand, left, right, epsabs=epsabs, epsrel=epsrel, limit=limit)
        total += value
    return total


def _sector_interior(chart: SectorChart, zeta: complex):
    zeta = complex(zeta)
    theta = math.atan2(zeta.imag, zeta.real)
    if zeta != 0 and (abs(theta) <= EDGE_TOL or abs(theta - chart.theta_max) <= EDGE_TOL):
        raise LabError("on-boundary", f"ζ = {zeta} lies on an edge of the sector")
    u, v = to_halfplane(chart, zeta)
    if v <= 0:
        raise LabError("on-boundary", f"ζ = {zeta} maps to the real axis")
    return u, v


def sector_harmonic_value(H: BoundaryFunction, chart: SectorChart, zeta: complex, **kwargs) -> float:
    """
    H(ζ) = P[H̃](ζ^γ): гармоническая функция в секторе по граничным данным на полуплоскости.

    Raises:
        LabError("on-boundary"): ζ на стороне сектора
        LabError("outside-sector"): ζ вне сектора
    """
    return poisson_extend(H, _sector_interior(chart, zeta), **kwargs)


def harmonic_residual(F: Callable[[float, float], float], point: Tuple[float, float], h: float,
                      domain: Optional[Callable[[float, float], bool]] = None) -> float:
    """
    |F(p) − среднее по 4 соседям| / h² (тест среднего значения на 5-точечном шаблоне).

    Raises:
        LabError("stencil-outside"): точка шаблона вне области
    """
    x, y = point
    stencil = [(x, y), (x + h, y), (x - h, y), (x, y + h), (x, y - h)]
    if domain is not None and not all(domain(sx, sy) for sx, sy in stencil):
        raise LabError("stencil-outside", f"5-point stencil at ({x}, {y}) with h = {h} leaves the domain")
    values = [F(sx, sy) for sx, sy in stencil]
    return abs(values[0] - sum(values[1:]) / 4) / h ** 2


def grid_residual(values: np.ndarray, i: int, j: int, h: float) -> float:
    """Тот же тест на сеточной функции; шаблон должен лежать внутри массива"""
    values = np.asarray(values)
    rows, cols = values.shape
    if not (1 <= i < rows - 1 and 1 <= j < cols - 1):
        raise LabError("stencil-outside", f"node ({i}, {j}) has no full stencil in a {rows}x{cols} grid")
    neighbours = values[i + 1, j] + values[i - 1, j] + values[i, j + 1] + values[i, j - 1]
    return abs(values[i, j] - neighbours / 4) / h ** 2


def hyperbolic_distance(p, q) -> float:
    """Расстояние в метрике |dW|/V верхней полуплоскости"""
    p, q = HalfPlanePoint.of(p), HalfPlanePoint.of(q)
    chord = (p.U - q.U) ** 2 + (p.V - q.V) ** 2
    return math.acosh(1 + chord / (2 * p.V * q.V))


def harnack_bounds(p, q) -> Tuple[float, float]:
    """Границы отношения h(p)/h(q) для положительной гармонической h: [e^{−d}, e^{d}]"""
    d = hyperbolic_distance(p, q)
    return math.exp(-d), math.exp(d)
