import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Dict, Any

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from harmonic_module import BoundaryFunction, poisson_extend
from leafgeom_module import SectorChart, to_halfplane

logger = get_logger()

Point = Tuple[float, float]


@dataclass
class HarmonicLeafFunction:
    """
    Положительная гармоническая функция h на области листа.

    distance: расстояние до края области (None: вся плоскость); шаг конечных
    разностей не превышает четверти этого расстояния.
    """
    func: Callable[[float, float], float]
    description: str = "formula"
    gradient_func: Optional[Callable[[float, float], Tuple[float, float]]] = None
    distance: Optional[Callable[[float, float], float]] = None
    h_fd: Optional[float] = None

    def contains(self, p: Point) -> bool:
        return self.distance is None or self.distance(*p) > 0

    def value(self, p: Point) -> float:
        if not self.contains(p):
            raise LabError("outside-domain", f"{p} is outside the domain of {self.description}")
        return float(self.func(*p))

    def _step(self, p: Point) -> float:
        step = get_config().metric.h_fd if self.h_fd is None else self.h_fd
        if self.distance is not None:
            step = min(step, self.distance(*p) / 4)
        return step

    def gradient(self, p: Point) -> Tuple[float, float]:
        if not self.contains(p):
            raise LabError("outside-domain", f"{p} is outside the domain of {self.description}")
        if self.gradient_func is not None:
            gx, gy = self.gradient_func(*p)
            return float(gx), float(gy)
        return richardson_gradient(self.func, p, self._step(p))

    def h_z(self, p: Point) -> complex:
        """∂h/∂z = (h_x − i·h_y)/2"""
        gx, gy = self.gradient(p)
        return complex(gx, -gy) / 2


def richardson_gradient(F: Callable[[float, float], Any], p: Point, step: float):
    """Центральные разности с экстраполяцией Ричардсона (порядок step⁴)"""
    x, y = p

    def central(s):
        return ((F(x + s, y) - F(x - s, y)) / (2 * s), (F(x, y + s) - F(x, y - s)) / (2 * s))

    coarse, fine = central(step), central(step / 2)
    return tuple((4 * f - c) / 3 for f, c in zip(fine, coarse))


def from_formula(func: Callable[[float, float], float], gradient=None, distance=None,
                 description: str = "formula") -> HarmonicLeafFunction:
    return HarmonicLeafFunction(func=func, description=description, gradient_func=gradient, distance=distance)


def on_halfplane(H: BoundaryFunction) -> HarmonicLeafFunction:
    """P[H̃] на верхней полуплоскости"""
    if H.exact is not None:
        func = H.exact
    else:
        def func(x, y):
            return poisson_extend(H, (x, y))
    return HarmonicLeafFunction(func=func, description=f"P[{H.description}]", distance=lambda x, y: y)


def on_sector(H: BoundaryFunction, chart: SectorChart) -> HarmonicLeafFunction:
    """h(ζ) = P[H̃](ζ^γ) на секторе 0 < arg ζ < theta_max"""
    def func(x, y):
        U, V = to_halfplane(chart, complex(x, y))
        return H.exact(U, V) if H.exact is not None else poisson_extend(H, (U, V))

    def distance(x, y):
        rho, theta = math.hypot(x, y), math.atan2(y, x)
        if not 0 < theta < chart.theta_max:
            return 0.0
        return rho * min(math.sin(theta) if theta < math.pi / 2 else 1.0,
                         math.sin(chart.theta_max - theta) if chart.theta_max - theta < math.pi / 2 else 1.0)

    return HarmonicLeafFunction(func=func, description=f"P[{H.description}]∘ζ^γ", distance=distance)


@dataclass(frozen=True)
class MetricSample:
    point: Point
    tau: complex
    rho_T: float
    kappa: Optional[float]
    kappa_imag: Optional[float]
    is_critical: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.point[0], "y": self.point[1],
            "tau": [self.tau.real, self.tau.imag],
            "rho_T": self.rho_T,
            "kappa": self.kappa,
            "kappa_imag": self.kappa_imag,
            "critical": self.is_critical
        }


def _positive_value(h: HarmonicLeafFunction, p: Point) -> float:
    value = h.value(p)
    if not value > 0:
        raise LabError("nonpositive-harmonic", f"h({p}) = {value} is not positive")
    return value


def is_critical(h: HarmonicLeafFunction, p: Point) -> bool:
    return abs(h.h_z(p)) < get_config().metric.tol_crit


def tau_at(h: HarmonicLeafFunction, p: Point) -> complex:
    """τ = ∂h/h"""
    return h.h_z(p) / _positive_value(h, p)


def rho_at(h: HarmonicLeafFunction, p: Point) -> float:
    """Плотность метрики g_T: 4|h_z|²/h²"""
    return 4 * abs(tau_at(h, p)) ** 2


def _curvature(h: HarmonicLeafFunction, p: Point) -> complex:
    value = _positive_value(h, p)
    hz = h.h_z(p)
    if abs(hz) < get_config().metric.tol_crit:
        raise LabError("metric-degenerate", f"{p} is a critical point of {h.description}")

    def ratio(x, y):
        return h.h_z((x, y)) / h.value((x, y))

    step = h._step(p)
    fx, fy = richardson_gradient(ratio, p, step)
    dzbar = (fx + 1j * fy) / 2
    return value ** 2 / abs(hz) ** 2 * dzbar


def curvature_at(h: HarmonicLeafFunction, p: Point) -> float:
    """
    Кривизна g_T по формуле (h²/|h_z|²)·∂_z̄(h_z/h); для гармонической h равна −1.

    Raises:
        LabError("metric-degenerate"): h_z(p) = 0
    """
    kappa = _curvature(h, p)
    if abs(kappa.imag) > 1e-6:
        logger.warning(f"Мнимая часть кривизны {kappa.imag:.3g} в точке {p}")
    return kappa.real


def metric_sample(h: HarmonicLeafFunction, p: Point) -> MetricSample:
    tau = tau_at(h, p)
    critical = is_critical(h, p)
    kappa = None if critical else _curvature(h, p)
    return MetricSample(point=p, tau=tau, rho_T=4 * abs(tau) ** 2,
                        kappa=None if kappa is None else kappa.real,
                        kappa_imag=None if kappa is None else kappa.imag,
                        is_critical=critical)


def mu_density(h: HarmonicLeafFunction, p: Point) -> float:
    """Плотность меры μ_T: |h_z|²/h"""
    return abs(h.h_z(p)) ** 2 / _positive_value(h, p)


CHI_SCALE = 0.25


def chi_at(h: HarmonicLeafFunction, p: Point) -> Tuple[np.ndarray, float]:
    """
    χ = c·(h/|h_z|²)·∇h, c = 1/4 дает g_T(χ, χ) = 1.

    Raises:
        LabError("metric-degenerate"): h_z(p) = 0
    """
    value = _positive_value(h, p)
    gx, gy = h.gradient(p)
    hz2 = (gx * gx + gy * gy) / 4
    if math.sqrt(hz2) < get_config().metric.tol_crit:
        raise LabError("metric-degenerate", f"χ is undefined at the critical point {p}")
    return CHI_SCALE * value / hz2 * np.array([gx, gy]), CHI_SCALE


def metric_norm(h: HarmonicLeafFunction, p: Point, vector) -> float:
    """g_T(X, X)"""
    return rho_at(h, p) * float(np.dot(vector, vector))


def flow_step(h: HarmonicLeafFunction, p: Point, dt: float) -> Point:
    """
    Шаг RK4 вдоль χ; траектории идут по линиям уровня сопряженной функции.

    Raises:
        LabError("hit-critical-set"): траектория подошла к критическому множеству
        LabError("outside-domain"): шаг вышел из области
    """
    def field(q):
        if not h.contains(tuple(q)):
            raise LabError("outside-domain", f"χ-flow left the domain at {tuple(q)}")
        try:
            return chi_at(h, tuple(q))[0]
        except LabError as e:
            if e.code == "metric-degenerate":
                raise LabError("hit-critical-set", f"χ-flow reached the critical set near {tuple(q)}")
            raise

    q = np.asarray(p, dtype=float)
    k1 = field(q)
    k2 = field(q + dt / 2 * k1)
    k3 = field(q + dt / 2 * k2)
    k4 = field(q + dt * k3)
    q = q + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return float(q[0]), float(q[1])


def conjugate_change(h: HarmonicLeafFunction, p: Point, q: Point, nodes: int = 16) -> float:
    """v(q) − v(p) для сопряженной v: ∫(−h_y dx + h_x dy) по отрезку, Гаусс–Лежандр"""
    t, weights = np.polynomial.legendre.leggauss(nodes)
    dx, dy = q[0] - p[0], q[1] - p[1]
    total = 0.0
    for s, weight in zip((t + 1) / 2, weights / 2):
        gx, gy = h.gradient((p[0] + s * dx, p[1] + s * dy))
        total += weight * (-gy * dx + gx * dy)
    return total


def poincare_density(chart: SectorChart, p: Point) -> float:
    """Плотность метрики кривизны −1 на секторе: |dW/dζ|²/V² при W = ζ^γ"""
    zeta = complex(*p)
    _, V = to_halfplane(chart, zeta)
    return chart.gamma ** 2 * abs(zeta) ** (2 * (chart.gamma - 1)) / V ** 2


def ahlfors_schwarz_gap(chart: SectorChart, h: HarmonicLeafFunction, p: Point) -> float:
    """ρ_P(p) − ρ_T(p); по лемме Шварца–Альфорса неотрицательна"""
    return poincare_density(chart, p) - rho_at(h, p)
