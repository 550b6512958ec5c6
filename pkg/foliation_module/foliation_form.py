from dataclasses import dataclass, field
from typing import Dict, Tuple, Sequence, Any, Optional

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from algebra_module import Poly, eliminate, partial_derivative

logger = get_logger()

HOMOGENEOUS = ("x1", "x2", "x3")
AFFINE = ("z", "w")
CHARTS = (0, 1, 2)

# Какая однородная координата равна 1 в карте и куда идут (z, w)
_CHART_LAYOUT = {
    0: {"fixed": 2, "z": 0, "w": 1},  # x3 = 1, (z, w) = (x1, x2)
    1: {"fixed": 0, "z": 1, "w": 2},  # x1 = 1, (z, w) = (x2, x3)
    2: {"fixed": 1, "z": 0, "w": 2},  # x2 = 1, (z, w) = (x1, x3)
}


def check_chart(chart: int) -> int:
    if chart not in _CHART_LAYOUT:
        raise LabError("arity", f"unknown chart {chart}; valid charts: {list(CHARTS)}")
    return chart


def chart_to_homogeneous(chart: int, point: Sequence[complex]) -> np.ndarray:
    """Точка карты -> однородные координаты"""
    layout = _CHART_LAYOUT[check_chart(chart)]
    x = np.ones(3, dtype=complex)
    x[layout["z"]] = point[0]
    x[layout["w"]] = point[1]
    return x


def homogeneous_to_chart(chart: int, x: Sequence[complex]) -> np.ndarray:
    """Однородные координаты -> точка карты (координата карты должна быть ненулевой)"""
    layout = _CHART_LAYOUT[check_chart(chart)]
    x = np.asarray(x, dtype=complex)
    pivot = x[layout["fixed"]]
    if pivot == 0:
        raise LabError("arity", f"point {x} is on the line at infinity of chart {chart}")
    return np.array([x[layout["z"]] / pivot, x[layout["w"]] / pivot])


def best_chart(x: Sequence[complex]) -> int:
    """Карта, в которой точка ближе всего к началу координат"""
    x = np.abs(np.asarray(x, dtype=complex))
    fixed_to_chart = {layout["fixed"]: chart for chart, layout in _CHART_LAYOUT.items()}
    return fixed_to_chart[int(np.argmax(x))]


def chart_transition(from_chart: int, to_chart: int, point: Sequence[complex]) -> np.ndarray:
    return homogeneous_to_chart(to_chart, chart_to_homogeneous(from_chart, point))


def restrict(a: Tuple[Poly, Poly, Poly], chart: int) -> Tuple[Poly, Poly]:
    """
    Ограничение формы a1 dx1 + a2 dx2 + a3 dx3 на аффинную карту.

    Returns:
        (alpha, beta) такие, что ω1 = alpha dz + beta dw
    """
    layout = _CHART_LAYOUT[check_chart(chart)]
    z, w = Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")
    images = [None, None, None]
    images[layout["z"]] = z
    images[layout["w"]] = w
    images[layout["fixed"]] = Poly.constant(AFFINE, 1.0)
    mapping = dict(zip(HOMOGENEOUS, images))
    alpha = a[layout["z"]].substitute(mapping, AFFINE)
    beta = a[layout["w"]].substitute(mapping, AFFINE)
    return alpha, beta


def _homogenize_to(p: Poly, degree: int) -> Poly:
    terms = {}
    for (i, j), c in p.terms.items():
        terms[(i, j, degree - i - j)] = c
    return Poly(HOMOGENEOUS, terms)


def homogenize(alpha: Poly, beta: Poly) -> Tuple[Poly, Poly, Poly]:
    """
    Однородная форма на CP² по форме alpha dz + beta dw в карте 0.

    Третья компонента определяется условием Эйлера; если старшая часть
    z·alpha + w·beta не обращается в ноль, степень повышается на единицу.
    """
    k = max(alpha.degree, beta.degree)
    if k < 0:
        raise LabError("degenerate", "zero chart form")
    a_h = _homogenize_to(alpha, k)
    b_h = _homogenize_to(beta, k)
    x1, x2 = Poly.variable(HOMOGENEOUS, "x1"), Poly.variable(HOMOGENEOUS, "x2")
    radial = x1 * a_h + x2 * b_h
    if all(exp[2] >= 1 for exp in radial.terms):
        a3 = -Poly(HOMOGENEOUS, {(e[0], e[1], e[2] - 1): c for e, c in radial.terms.items()})
        return a_h, b_h, a3
    x3 = Poly.variable(HOMOGENEOUS, "x3")
    return x3 * a_h, x3 * b_h, -radial


@dataclass(frozen=True)
class FoliationForm:
    """
    Однородная 1-форма ω0 = a1 dx1 + a2 dx2 + a3 dx3 степени δ и ее ограничения на карты.
    """
    a1: Poly
    a2: Poly
    a3: Poly
    degree_d: int
    chart_forms: Dict[int, Tuple[Poly, Poly]] = field(default_factory=dict)
    name: str = "custom"

    @property
    def delta(self) -> int:
        return self.degree_d + 1

    @property
    def coefficients(self) -> Tuple[Poly, Poly, Poly]:
        return self.a1, self.a2, self.a3

    def chart_form(self, chart: int) -> Tuple[Poly, Poly]:
        return self.chart_forms[check_chart(chart)]

    def vector_field(self, chart: int) -> Tuple[Poly, Poly]:
        """Направляющее поле X = (beta, −alpha), ω1(X) = 0"""
        alpha, beta = self.chart_form(chart)
        return beta, -alpha

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "degree": self.degree_d,
            "a1": self.a1.to_dict(),
            "a2": self.a2.to_dict(),
            "a3": self.a3.to_dict()
        }


def _line_restriction_check(a: Tuple[Poly, Poly, Poly], rng: np.random.Generator) -> bool:
    """
    True, если у a1, a2, a3 есть общий множитель положительной степени.

    Две общие случайные комбинации ограничиваются на случайную аффинную
    плоскость; их результант тождественно равен нулю ровно при общем множителе.
    """
    st = ("s", "t")
    s, t = Poly.variable(st, "s"), Poly.variable(st, "t")
    transform = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    images = [s * complex(transform[i, 0]) + t * complex(transform[i, 1]) + complex(transform[i, 2])
              for i in range(3)]
    mapping = dict(zip(HOMOGENEOUS, images))
    restricted = [p.substitute(mapping, st) for p in a]
    weights = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    f = sum((restricted[i] * complex(weights[0, i]) for i in range(3)), Poly.zero(st))
    g = sum((restricted[i] * complex(weights[1, i]) for i in range(3)), Poly.zero(st))
    if f.is_zero() or g.is_zero():
        return True
    if f.degree_in("t") == 0 and g.degree_in("t") == 0:
        return False
    return eliminate(f, g, "t").resultant.is_zero()


def euler_residual(f: FoliationForm, x: Sequence[complex]) -> float:
    """|Σ x_i a_i(x)|, нормированная на ‖x‖∞^(δ+1)"""
    x = np.asarray(x, dtype=complex)
    if x.size != 3:
        raise LabError("arity", f"expected 3 homogeneous coordinates, got {x.size}")
    norm = np.max(np.abs(x))
    if norm == 0:
        return 0.0
    total = sum(x[i] * f.coefficients[i](x) for i in range(3))
    return float(abs(total) / norm ** (f.delta + 1))


def make_foliation(a1: Poly, a2: Poly, a3: Poly, name: str = "custom",
                   euler_tol: Optional[float] = None) -> FoliationForm:
    """
    Проверяет однородную форму и строит ее ограничения на три карты.

    Raises:
        LabError("not-projective-form"): нарушено условие Эйлера или степени не согласованы
        LabError("non-reduced"): у коэффициентов есть общий множитель
    """
    cfg = get_config().foliation
    euler_tol = cfg.euler_tol if euler_tol is None else euler_tol
    a = tuple(p.extend(HOMOGENEOUS) if p.variables != HOMOGENEOUS else p for p in (a1, a2, a3))

    nonzero = [p for p in a if not p.is_zero()]
    if not nonzero:
        raise LabError("non-reduced", "all coefficients vanish")
    degrees = {p.degree for p in nonzero}
    if len(degrees) != 1 or not all(p.is_homogeneous() for p in nonzero):
        raise LabError("not-projective-form", f"coefficients must be homogeneous of one degree, got {sorted(degrees)}")
    delta = degrees.pop()
    if delta < 2:
        raise LabError("not-projective-form", f"homogeneous degree {delta} < 2")

    rng = np.random.Generator(np.random.Philox(20240607))
    if len(nonzero) < 2 or _line_restriction_check(a, rng):
        raise LabError("non-reduced", "coefficients share a common factor")

    form = FoliationForm(a1=a[0], a2=a[1], a3=a[2], degree_d=delta - 1, name=name)
    scale = max(p.max_abs_coeff() for p in nonzero)
    points = rng.standard_normal((cfg.euler_samples, 3)) + 1j * rng.standard_normal((cfg.euler_samples, 3))
    worst = max(euler_residual(form, x) for x in points)
    if worst > euler_tol * scale:
        raise LabError("not-projective-form", f"Euler residual {worst:.3e} exceeds {euler_tol:g}")

    charts = {chart: restrict(a, chart) for chart in CHARTS}
    form = FoliationForm(a1=a[0], a2=a[1], a3=a[2], degree_d=delta - 1, chart_forms=charts, name=name)
    logger.debug(f"Слоение {name}: степень {form.degree_d}, невязка Эйлера {worst:.2e}")
    return form


def degree_of(f: FoliationForm) -> int:
    """Степень слоения d = δ − 1"""
    return f.degree_d


def form_residual(f: FoliationForm, chart: int, point: Sequence[complex]) -> float:
    """max(|alpha|, |beta|) в точке карты"""
    alpha, beta = f.chart_form(chart)
    return float(max(abs(alpha(point)), abs(beta(point))))


def vector_field_jacobian(f: FoliationForm, chart: int):
    """Символьный якобиан поля X в карте: 2×2 список многочленов"""
    fields = f.vector_field(chart)
    return [[partial_derivative(comp, v) for v in AFFINE] for comp in fields]
