import math
from dataclasses import dataclass
from typing import Tuple, Dict, Any, Union

import numpy as np

from core.errors import LabError
from core.logging import get_logger

logger = get_logger()

# Допуск на границе сектора и окна бидиска
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class SectorChart:
    """
    Координаты модельного листа для гиперболической точки с λ = a + ib, b > 0.

    Сектор 0 < arg ζ < theta_max переводится в верхнюю полуплоскость степенью γ = π/theta_max.
    mirrored: карта построена по сопряженному λ (исходное b < 0, обе координаты сопряжены).
    """
    lam: complex
    theta_max: float
    gamma: float
    mirrored: bool = False

    @property
    def a(self) -> float:
        return self.lam.real

    @property
    def b(self) -> float:
        return self.lam.imag

    @property
    def alpha_range(self) -> Tuple[float, float]:
        """Фундаментальное кольцо e^{−2πb} ≤ |α| < 1"""
        return math.exp(-2 * math.pi * self.b), 1.0

    @property
    def holonomy_factor(self) -> float:
        return math.exp(-2 * math.pi * self.b)

    def describe_window(self) -> str:
        return f"v > 0 and {self.b:.17g}*u + {self.a:.17g}*v > 0"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": [self.a, self.b],
            "theta_max": self.theta_max,
            "gamma": self.gamma,
            "mirrored": self.mirrored,
            "alpha_range": list(self.alpha_range),
            "window": self.describe_window()
        }


def sector_of(lam: complex, allow_mirror: bool = False) -> SectorChart:
    """
    Сектор S_λ: theta_max = atan2(b, −a) ∈ (0, π), γ = π/theta_max.

    Raises:
        LabError("not-normalized"): Im λ ≤ 0 (при allow_mirror допустимо Im λ < 0)
    """
    lam = complex(lam)
    mirrored = False
    if lam.imag <= 0:
        if allow_mirror and lam.imag < 0:
            lam = lam.conjugate()
            mirrored = True
        else:
            raise LabError("not-normalized", f"Im λ must be positive, got λ = {lam}")
    theta_max = math.pi / 2 if lam.real == 0 else math.atan2(lam.imag, -lam.real)
    gamma = 2.0 if lam.real == 0 else math.pi / theta_max
    return SectorChart(lam=lam, theta_max=theta_max, gamma=gamma, mirrored=mirrored)


def _lam(chart: Union[SectorChart, complex]) -> complex:
    return chart.lam if isinstance(chart, SectorChart) else complex(chart)


def to_halfplane(chart: SectorChart, zeta: complex) -> Tuple[float, float]:
    """
    ζ ↦ ζ^γ в полярной форме: (U, V) = (ρ^γ cos γθ, ρ^γ sin γθ).

    Raises:
        LabError("outside-sector"): ζ = 0 или arg ζ вне [0, theta_max]
    """
    zeta = complex(zeta)
    rho = abs(zeta)
    if rho == 0:
        raise LabError("outside-sector", "ζ = 0 is the vertex of the sector")
    theta = math.atan2(zeta.imag, zeta.real)
    if theta < -EDGE_TOL or theta > chart.theta_max + EDGE_TOL:
        raise LabError("outside-sector", f"arg ζ = {theta:.6g} outside [0, {chart.theta_max:.6g}]")
    theta = min(max(theta, 0.0), chart.theta_max)
    radius = rho ** chart.gamma
    if theta == 0.0:
        return radius, 0.0
    if theta == chart.theta_max:
        return -radius, 0.0
    return radius * math.cos(chart.gamma * theta), radius * math.sin(chart.gamma * theta)


def to_halfplane_array(chart: SectorChart, zeta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Векторизованный вариант to_halfplane без проверок (для квадратур)"""
    rho = np.abs(zeta)
    theta = np.clip(np.angle(zeta), 0.0, chart.theta_max)
    radius = rho ** chart.gamma
    return radius * np.cos(chart.gamma * theta), radius * np.sin(chart.gamma * theta)


def from_halfplane(chart: SectorChart, u: float, v: float) -> complex:
    """Обратное отображение верхней полуплоскости в сектор: W ↦ W^{1/γ}"""
    if v < 0:
        raise LabError("outside-sector", f"V = {v} < 0")
    radius = math.hypot(u, v)
    if radius == 0:
        raise LabError("outside-sector", "W = 0 is the image of the vertex")
    phi = math.atan2(v, u)
    return radius ** (1 / chart.gamma) * complex(math.cos(phi / chart.gamma), math.sin(phi / chart.gamma))


def holonomy_step(chart: Union[SectorChart, complex], w: complex, steps: int = 1) -> complex:
    """
    Голономия вокруг сепаратрисы z = 0 на трансверсали |z0| = 1: w ↦ w·e^{2πiλ}.

    Модуль уменьшается в e^{2πb} раз на каждый оборот; w = 0 неподвижна.
    """
    w = complex(w)
    if w == 0:
        return 0j
    return w * np.exp(2j * math.pi * _lam(chart) * steps)


def bidisc_window(chart: Union[SectorChart, complex], zeta: complex, closed: bool = False) -> bool:
    """
    Пересечение листа с единичным бидиском: v > 0 и bu + av > 0 (независимо от α).

    closed: замкнутое окно с допуском EDGE_TOL (|z| ≤ 1, |w| ≤ 1).
    """
    lam = _lam(chart)
    zeta = complex(zeta)
    u, v = zeta.real, zeta.imag
    second = lam.imag * u + lam.real * v
    if closed:
        return v >= -EDGE_TOL and second >= -EDGE_TOL
    return v > 0 and second > 0


def plaque_bounds(chart: SectorChart, n: int) -> Dict[str, Any]:
    """
    Прямоугольник (u, v) плакетки n внутри окна бидиска.

    u ∈ [2nπ, 2(n+1)π); v ограничено снизу нулем и прямой bu + av = 0.
    При a > 0 нижняя граница берется на правом крае u_max: плакетки n < 0
    задевают окно при v > −b·u_max/a.
    """
    a, b = chart.a, chart.b
    u_min, u_max = 2 * math.pi * n, 2 * math.pi * (n + 1)
    if a > 0:
        v_min, v_max = max(0.0, -b * u_max / a), math.inf
    elif a < 0:
        v_min, v_max = 0.0, b * u_max / -a
    else:
        v_min, v_max = 0.0, math.inf
    empty = (a <= 0 and u_max <= 0)
    return {"n": n, "u": (u_min, u_max), "v": (v_min, v_max), "empty": empty}


def plaque_index(u: float) -> int:
    """Номер плакетки по полуоткрытому правилу [2nπ, 2(n+1)π)"""
    n = math.floor(u / (2 * math.pi))
    if abs(u - 2 * math.pi * round(u / (2 * math.pi))) < EDGE_TOL * max(1.0, abs(u)):
        logger.debug(f"u = {u:.17g} на границе плакеток, выбрана n = {n}")
    return n


def lowest_plaque(chart: SectorChart, v_max: float) -> int:
    """
    Наименьший номер плакетки, задевающей окно бидиска при v ≤ v_max.

    При a ≤ 0 это 0; при a > 0 окно уходит в u < 0 до u > −a·v_max/b.
    """
    if chart.a <= 0:
        return 0
    if not math.isfinite(v_max):
        raise LabError("config", "при a > 0 нужна конечная верхняя граница v")
    return -math.ceil(chart.a * max(v_max, 0.0) / (2 * math.pi * chart.b))
