from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from algebra_module import Poly, eliminate, univariate_roots, newton_polish
from foliation_module.foliation_form import (
    FoliationForm, check_chart, chart_to_homogeneous, homogeneous_to_chart
)
from monitoring import record_singular_points

logger = get_logger()


@dataclass
class SingularPointSet:
    """Особые точки слоения в одной карте"""
    chart: int
    points: List[np.ndarray] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    multiplicity_flags: List[str] = field(default_factory=list)  # simple / degenerate

    def __len__(self):
        return len(self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chart": self.chart,
            "points": [
                {
                    "z": [p[0].real, p[0].imag],
                    "w": [p[1].real, p[1].imag],
                    "residual": r,
                    "flag": flag
                }
                for p, r, flag in zip(self.points, self.residuals, self.multiplicity_flags)
            ]
        }


def _specialize(p: Poly, var: str, value: complex) -> np.ndarray:
    """Коэффициенты p как многочлена от var при фиксированной второй переменной"""
    return np.array([c(value) if not c.is_zero() else 0j for c in p.coefficients_in(var)], dtype=complex)


def _candidate_roots(coeffs: np.ndarray, scale: float) -> Optional[np.ndarray]:
    """Корни специализации или None, если она тождественно (численно) нулевая"""
    if np.max(np.abs(coeffs), initial=0.0) <= 1e-9 * scale:
        return None
    nonzero = np.nonzero(np.abs(coeffs) > 1e-12 * np.max(np.abs(coeffs)))[0]
    top = nonzero[-1]
    if top == 0:
        return np.zeros(0, dtype=complex)
    companion = np.polynomial.polynomial.polycompanion(coeffs[:top + 1])
    return np.linalg.eigvals(companion)


def singular_points(f: FoliationForm, chart: int = 0, search_radius: Optional[float] = None) -> SingularPointSet:
    """
    Все изолированные общие нули (alpha, beta) в карте в окне ‖(z,w)‖∞ ≤ R.

    Исключение w результантом, корни сопровождающей матрицы, обратная
    подстановка и полировка Ньютоном; дубликаты сливаются.

    Raises:
        LabError("positive-dimensional-singularity"): множество нулей содержит кривую
    """
    cfg = get_config()
    radius = cfg.foliation.search_radius if search_radius is None else search_radius
    check_chart(chart)
    alpha, beta = f.chart_form(chart)
    if alpha.is_zero() or beta.is_zero():
        raise LabError("positive-dimensional-singularity", f"chart {chart}: one of the form coefficients vanishes")

    # Исключаем w, если хотя бы один коэффициент от него зависит
    if alpha.degree_in("w") > 0 or beta.degree_in("w") > 0:
        var, other = "w", "z"
    else:
        var, other = "z", "w"

    elimination = eliminate(alpha, beta, var)
    resultant = elimination.resultant
    if resultant.is_zero():
        raise LabError("positive-dimensional-singularity",
                       f"chart {chart}: resultant in {var} vanishes identically")

    result = SingularPointSet(chart=chart)
    if resultant.degree <= 0:
        logger.info(f"Карта {chart}: особых точек нет")
        record_singular_points(chart, 0)
        return result

    coeff_scale = max(alpha.max_abs_coeff(), beta.max_abs_coeff())
    top_degree = max(alpha.degree, beta.degree)
    found: List[np.ndarray] = []
    flags: List[str] = []

    for root in univariate_roots(resultant):
        if abs(root) > radius * (1 + 1e-9):
            continue
        if elimination.leading_degenerate(root):
            logger.warning(f"Карта {chart}: вырожденные старшие коэффициенты при {other} = {root:.6g}")
        point_scale = coeff_scale * max(1.0, abs(root)) ** top_degree
        candidates = []
        specials = [_candidate_roots(_specialize(p, var, root), point_scale) for p in (alpha, beta)]
        if specials[0] is None and specials[1] is None:
            raise LabError("positive-dimensional-singularity",
                           f"chart {chart}: the line {other} = {root:.6g} lies in the singular set")
        for roots in specials:
            if roots is not None:
                candidates.extend(roots)

        for value in candidates:
            guess = (root, value) if var == "w" else (value, root)
            if not np.all(np.isfinite(guess)) or max(abs(guess[0]), abs(guess[1])) > 10 * radius:
                continue
            growth = max(1.0, abs(guess[0]), abs(guess[1])) ** top_degree
            tol = cfg.algebra.newton_tol * coeff_scale * growth
            flag = "simple"
            try:
                point = newton_polish((alpha, beta), guess, tol=tol)
            except LabError as e:
                if e.code != "jacobian-singular":
                    logger.debug(f"Кандидат {guess} отброшен: {e.code}")
                    continue
                point = np.asarray(guess, dtype=complex)
                flag = "degenerate"
            residual = max(abs(alpha(point)), abs(beta(point)))
            if residual > cfg.foliation.residual_tol * max(1.0, coeff_scale) * growth:
                continue
            if np.max(np.abs(point)) > radius:
                continue
            found.append(point)
            flags.append(flag)

    merged_points: List[np.ndarray] = []
    merged_flags: List[str] = []
    for point, flag in zip(found, flags):
        if any(np.max(np.abs(point - q)) < cfg.foliation.merge_distance for q in merged_points):
            continue
        merged_points.append(point)
        merged_flags.append(flag)

    order = sorted(range(len(merged_points)),
                   key=lambda i: tuple(np.round([merged_points[i][0].real, merged_points[i][0].imag,
                                                 merged_points[i][1].real, merged_points[i][1].imag], 9)))
    for i in order:
        p = merged_points[i]
        result.points.append(p)
        result.residuals.append(float(max(abs(alpha(p)), abs(beta(p)))))
        result.multiplicity_flags.append(merged_flags[i])

    bezout = max(alpha.degree, 1) * max(beta.degree, 1)
    if len(result) > bezout:
        logger.warning(f"Карта {chart}: {len(result)} точек больше границы Безу {bezout}")

    record_singular_points(chart, len(result))
    logger.info(f"Карта {chart}: найдено {len(result)} особых точек ({f.name})")
    return result


def projective_singular_points(f: FoliationForm) -> List[np.ndarray]:
    """
    Особые точки на всей CP² в однородных координатах (нормированных на max|x_i| = 1).

    Три карты покрывают плоскость; точки вне окна одной карты находятся в другой.
    """
    collected: List[np.ndarray] = []
    for chart in (0, 1, 2):
        for p in singular_points(f, chart).points:
            x = chart_to_homogeneous(chart, p)
            x = x / x[np.argmax(np.abs(x))]
            if not any(np.max(np.abs(x - y)) < 1e-7 for y in collected):
                collected.append(x)
    return collected


def singular_points_in_chart(f: FoliationForm, chart: int) -> List[np.ndarray]:
    """Все особые точки CP², видимые в данной карте"""
    points = []
    for x in projective_singular_points(f):
        try:
            points.append(homogeneous_to_chart(chart, x))
        except LabError:
            continue
    return points
