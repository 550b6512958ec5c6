from dataclasses import dataclass, field
from typing import Tuple, List, Optional, Sequence, Dict, Any

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from algebra_module import Poly, partial_derivative
from foliation_module import AFFINE, FoliationForm
from singularity_module.linear_part import (
    linear_part, lambda_of, classify_hyperbolic, normalize_lambda, HYPERBOLIC, SWAP_AXES
)

logger = get_logger()

PolyPair = Tuple[Poly, Poly]


def _identity() -> PolyPair:
    return Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")


def _compose(vf: PolyPair, inner: PolyPair, order: int) -> PolyPair:
    """field(inner(x)), усеченное до степени order"""
    mapping = {"z": inner[0], "w": inner[1]}
    return tuple(comp.substitute(mapping, AFFINE).truncate(order) for comp in vf)


def _jacobian_times(h: PolyPair, v: PolyPair, order: int) -> PolyPair:
    """Dh(x)·v(x), усеченное до степени order"""
    out = []
    for comp in h:
        dz = partial_derivative(comp, "z")
        dw = partial_derivative(comp, "w")
        out.append((dz * v[0] + dw * v[1]).truncate(order))
    return tuple(out)


def solve_homological(vf: PolyPair, mu: Tuple[complex, complex], order: int,
                      resonance_tol: Optional[float] = None) -> PolyPair:
    """
    Решает гомологические уравнения степень за степенью.

    vf: поле в собственных координатах с линейной частью diag(μ1, μ2).
    Возвращает h (степени 2..order) с y = x + h(x), сопрягающим vf к diag(μ1, μ2).

    Raises:
        LabError("resonance"): малый знаменатель ⟨m, μ⟩ − μ_j
    """
    if resonance_tol is None:
        resonance_tol = get_config().singularity.resonance_tol
    z, w = _identity()
    linear = (z * mu[0], w * mu[1])
    h: PolyPair = (Poly.zero(AFFINE), Poly.zero(AFFINE))
    scale = max(abs(mu[0]), abs(mu[1]))

    for degree in range(2, order + 1):
        y = (z + h[0], w + h[1])
        image = _compose(vf, y, degree)
        transported = _jacobian_times(h, linear, degree)
        new_terms: List[Dict] = [dict(h[0].terms), dict(h[1].terms)]
        for j in range(2):
            g = image[j] - transported[j] - linear[j]
            for exp, coeff in g.homogeneous_part(degree).terms.items():
                divisor = exp[0] * mu[0] + exp[1] * mu[1] - mu[j]
                if abs(divisor) < resonance_tol * scale:
                    raise LabError("resonance", f"resonant monomial {exp} in component {j}")
                new_terms[j][exp] = new_terms[j].get(exp, 0) + coeff / divisor
        h = (Poly(AFFINE, new_terms[0]), Poly(AFFINE, new_terms[1]))
    return h


def invert_series(forward: PolyPair, order: int) -> PolyPair:
    """Обращение ряда y = x + h(x) итерацией x = y − h(x)"""
    z, w = _identity()
    h = (forward[0] - z, forward[1] - w)
    inverse = (z, w)
    for _ in range(order):
        hx = _compose(h, inverse, order)
        inverse = (z - hx[0], w - hx[1])
    return inverse


@dataclass(frozen=True)
class LinearizingJet:
    """
    Конечный джет линеаризующей замены Пуанкаре в особой точке.

    forward: линеаризующие координаты -> собственные координаты (y = x + h(x));
    inverse: усеченный обратный ряд. Аффинная часть (центр и базис P) хранится вместе с джетом.
    """
    order: int
    forward_coeffs: PolyPair
    inverse_coeffs: PolyPair
    center: np.ndarray
    basis: np.ndarray
    eigenvalues: Tuple[complex, complex]
    eigen_field: PolyPair = field(repr=False, default=None)

    @property
    def lam(self) -> complex:
        return self.eigenvalues[1] / self.eigenvalues[0]

    def to_chart(self, x: Sequence[complex]) -> np.ndarray:
        """Модельные (линеаризующие) координаты -> координаты карты"""
        y = np.array([self.forward_coeffs[0](x), self.forward_coeffs[1](x)])
        return self.center + self.basis @ y

    def to_model(self, q: Sequence[complex]) -> np.ndarray:
        """Координаты карты -> модельные координаты"""
        y = np.linalg.solve(self.basis, np.asarray(q, dtype=complex) - self.center)
        return np.array([self.inverse_coeffs[0](y), self.inverse_coeffs[1](y)])

    def conjugation_residual(self) -> float:
        """Максимальный коэффициент Y(F(x)) − DF(x)·Λx через степень order"""
        if self.eigen_field is None:
            return 0.0
        z, w = _identity()
        linear = (z * self.eigenvalues[0], w * self.eigenvalues[1])
        image = _compose(self.eigen_field, self.forward_coeffs, self.order)
        transported = _jacobian_times(self.forward_coeffs, linear, self.order)
        return max((image[j] - transported[j]).max_abs_coeff() for j in range(2))

    def composition_residual(self) -> float:
        """Максимальный коэффициент forward∘inverse − id через степень order"""
        z, w = _identity()
        comp = _compose(self.forward_coeffs, self.inverse_coeffs, self.order)
        return max((comp[0] - z).max_abs_coeff(), (comp[1] - w).max_abs_coeff())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "forward": [p.to_dict() for p in self.forward_coeffs],
            "inverse": [p.to_dict() for p in self.inverse_coeffs],
            "center": [[c.real, c.imag] for c in self.center],
            "eigenvalues": [[m.real, m.imag] for m in self.eigenvalues]
        }


def eigen_coordinates_field(f: FoliationForm, chart: int, center: np.ndarray,
                            basis: np.ndarray, order: int) -> PolyPair:
    """Поле Y(y) = P⁻¹ X(center + P y), усеченное до степени order"""
    z, w = _identity()
    shift = {
        "z": z * complex(basis[0, 0]) + w * complex(basis[0, 1]) + complex(center[0]),
        "w": z * complex(basis[1, 0]) + w * complex(basis[1, 1]) + complex(center[1]),
    }
    raw = tuple(comp.substitute(shift, AFFINE).truncate(order) for comp in f.vector_field(chart))
    inv = np.linalg.inv(basis)
    vf = tuple(raw[0] * complex(inv[j, 0]) + raw[1] * complex(inv[j, 1]) for j in range(2))
    # Свободный член равен нулю в особой точке с точностью полировки
    return tuple(Poly(AFFINE, {e: c for e, c in comp.terms.items() if sum(e) > 0}) for comp in vf)


def jet_from_field(eigen_field: PolyPair, mu: Tuple[complex, complex], order: int,
                   center: np.ndarray, basis: np.ndarray) -> LinearizingJet:
    if order < 1:
        raise LabError("config", f"jet order must be >= 1, got {order}")
    z, w = _identity()
    # Линейная часть в собственном базисе диагональна; внедиагональный шум округления отбрасываем
    nonlinear = tuple(Poly(AFFINE, {e: c for e, c in comp.terms.items() if sum(e) >= 2}) for comp in eigen_field)
    vf = (nonlinear[0] + z * mu[0], nonlinear[1] + w * mu[1])
    h = solve_homological(vf, mu, order)
    forward = (z + h[0], w + h[1])
    inverse = invert_series(forward, order)
    return LinearizingJet(order=order, forward_coeffs=forward, inverse_coeffs=inverse,
                          center=np.asarray(center, dtype=complex), basis=np.asarray(basis, dtype=complex),
                          eigenvalues=(complex(mu[0]), complex(mu[1])), eigen_field=vf)


@dataclass
class HyperbolicSingularity:
    """Особая точка с линейной частью, инвариантом λ, историей нормализации и джетом"""
    location: np.ndarray
    chart: int
    linear_part: np.ndarray
    raw_lambda: complex
    lam: complex
    classification: str
    normalization_log: List[str] = field(default_factory=list)
    eigenvalues: Tuple[complex, complex] = (1 + 0j, 1 + 0j)
    jet: Optional[LinearizingJet] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chart": self.chart,
            "location": [[c.real, c.imag] for c in self.location],
            "lambda": [self.lam.real, self.lam.imag],
            "raw_lambda": [self.raw_lambda.real, self.raw_lambda.imag],
            "class": self.classification,
            "moves": list(self.normalization_log),
            "eigenvalues": [[m.real, m.imag] for m in self.eigenvalues],
            "jet_order": self.jet.order if self.jet else None
        }


def _eigenbasis(m: np.ndarray, mu1: complex, mu2: complex) -> np.ndarray:
    """Столбцы: собственные векторы для μ1 и μ2 (единичной нормы)"""
    columns = []
    for mu in (mu1, mu2):
        _, _, vh = np.linalg.svd(m - mu * np.eye(2))
        v = vh[-1].conj()
        columns.append(v / np.linalg.norm(v))
    return np.column_stack(columns)


def linearize_jet(f: FoliationForm, p: Sequence[complex], order: Optional[int] = None,
                  chart: int = 0) -> LinearizingJet:
    """
    Джет порядка k линеаризующей замены в гиперболической особой точке.

    Оси упорядочены так, что отношение собственных чисел равно нормализованному λ.

    Raises:
        LabError("not-hyperbolic"): λ вещественно
        LabError("resonance"): резонансный знаменатель
    """
    return analyze_singularity(f, p, chart=chart, order=order, require_hyperbolic=True).jet


def analyze_singularity(f: FoliationForm, p: Sequence[complex], chart: int = 0,
                        order: Optional[int] = None, require_hyperbolic: bool = False) -> HyperbolicSingularity:
    """Линейная часть, λ, классификация, нормализация и (для гиперболических) джет"""
    cfg = get_config().singularity
    order = cfg.jet_order if order is None else order
    p = np.asarray(p, dtype=complex)
    m = linear_part(f, p, chart)
    raw_lam, mu1, mu2 = lambda_of(m)
    classification = classify_hyperbolic(raw_lam)
    lam, moves = normalize_lambda(raw_lam)
    if moves.count(SWAP_AXES) % 2 == 1:
        mu1, mu2 = mu2, mu1

    singularity = HyperbolicSingularity(
        location=p, chart=chart, linear_part=m, raw_lambda=raw_lam, lam=lam,
        classification=classification, normalization_log=moves, eigenvalues=(mu1, mu2)
    )
    if classification != HYPERBOLIC:
        if require_hyperbolic:
            raise LabError("not-hyperbolic", f"λ = {raw_lam:.6g} at {p} is not hyperbolic")
        logger.warning(f"Особая точка {p} не гиперболическая: λ = {raw_lam:.6g}")
        return singularity

    basis = _eigenbasis(m, mu1, mu2)
    eigen_field = eigen_coordinates_field(f, chart, p, basis, order)
    singularity.jet = jet_from_field(eigen_field, (mu1, mu2), order, p, basis)
    logger.debug(f"Джет порядка {order} в {p}: невязка сопряжения {singularity.jet.conjugation_residual():.2e}")
    return singularity
