import math
from typing import List, Sequence, Tuple

import numpy as np

from core.errors import LabError
from core.logging import get_logger
from harmonic_module import BoundaryFunction
from leafgeom_module import SectorChart
from metric_module.leaf_metric import HarmonicLeafFunction, on_halfplane, mu_density

logger = get_logger()


def _in_bidisc(chart: SectorChart, U: float, V: float, r: float) -> bool:
    """Прообраз W = ζ^γ лежит в Δ²(0, r): v > log(1/r) и bu + av > log(1/r)"""
    if r >= 1:
        return True
    level = math.log(1 / r)
    rho = math.hypot(U, V) ** (1 / chart.gamma)
    theta = math.atan2(V, U) / chart.gamma
    return rho * math.sin(theta) > level and rho * (chart.b * math.cos(theta) + chart.a * math.sin(theta)) > level


def _mass(chart: SectorChart, h: HarmonicLeafFunction, r: float, panels: int) -> float:
    t, tw = np.polynomial.legendre.leggauss(panels)
    tan_t = np.tan(math.pi * t / 2)
    s, sw = np.polynomial.legendre.leggauss(panels)
    s, sw = (s + 1) / 2, sw / 2
    V = s / (1 - s)
    V_w = sw / (1 - s) ** 2
    total = 0.0
    for v, wv in zip(V, V_w):
        # ширина ядра Пуассона растет как V + 1
        U = (v + 1) * tan_t
        U_w = tw * (v + 1) * math.pi / 2 * (1 + tan_t ** 2)
        for u, wu in zip(U, U_w):
            if _in_bidisc(chart, u, v, r):
                total += wu * wv * mu_density(h, (u, v))
    return total


def mu_mass(chart: SectorChart, H: BoundaryFunction, r: float = 1.0, panels: int = 32) -> Tuple[float, float]:
    """
    Масса μ_T в бидиске Δ²(0, r) для модельного тока с h_α(ζ) = P[H̃](ζ^γ).

    Область в координате ζ не зависит от α, а μ нормирована на кольце, поэтому
    масса равна интегралу |h_W|²/h по образу области в полуплоскости
    (форма |∂h|²/h·dA конформно инвариантна). Квадратура Гаусса–Лежандра
    по U = (V + 1)·tan(πt/2) и V = s/(1 − s).

    Returns:
        (значение на 2·panels узлах, |разность с panels узлами|)

    Raises:
        LabError("divergent-mass"): квадратура не конечна
    """
    if not 0 < r <= 1:
        raise LabError("config", f"bidisc radius must lie in (0, 1], got {r}")
    h = on_halfplane(H)
    coarse = _mass(chart, h, r, panels)
    fine = _mass(chart, h, r, 2 * panels)
    if not math.isfinite(fine):
        raise LabError("divergent-mass", f"μ_T quadrature diverged for {H.description}")
    error = abs(fine - coarse)
    logger.debug(f"Масса μ_T в Δ²(0, {r:g}): {fine:.10g} ± {error:.3g}")
    return fine, error


def mass_profile(chart: SectorChart, H: BoundaryFunction, radii: Sequence[float],
                 panels: int = 32) -> List[Tuple[float, float, float]]:
    """Массы по убывающим бидискам: строки (r, масса, оценка погрешности)"""
    rows = []
    for r in sorted(radii, reverse=True):
        value, error = mu_mass(chart, H, r, panels)
        rows.append((r, value, error))
    return rows
