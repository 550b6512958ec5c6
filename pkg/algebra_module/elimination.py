from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from algebra_module.poly import Poly

logger = get_logger()


@dataclass(frozen=True)
class Elimination:
    """
    Результат исключения переменной.

    resultant: многочлен от оставшейся переменной; lead_p, lead_q: старшие
    коэффициенты по исключенной переменной (нужны для флага вырождения).
    """
    resultant: Poly
    lead_p: Poly
    lead_q: Poly
    var: str

    def leading_degenerate(self, value: complex, tol: float = None) -> bool:
        """True, если в этой точке оба старших коэффициента обращаются в ноль"""
        if tol is None:
            tol = get_config().algebra.leading_coeff_tol
        return abs(self.lead_p(value)) < tol and abs(self.lead_q(value)) < tol


def bareiss_determinant(matrix: np.ndarray) -> complex:
    """
    Определитель методом Барейса (бездробное исключение) с выбором ведущего элемента.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    sign = 1.0
    prev = 1.0 + 0j
    for k in range(n - 1):
        pivot = k + int(np.argmax(np.abs(a[k:, k])))
        if a[pivot, k] == 0:
            return 0j
        if pivot != k:
            a[[k, pivot]] = a[[pivot, k]]
            sign = -sign
        a[k + 1:, k + 1:] = (a[k + 1:, k + 1:] * a[k, k] - np.outer(a[k + 1:, k], a[k, k + 1:])) / prev
        a[k + 1:, k] = 0
        prev = a[k, k]
    return sign * a[n - 1, n - 1]


def sylvester_matrix(p_coeffs: List[complex], q_coeffs: List[complex]) -> np.ndarray:
    """
    Матрица Сильвестра по спискам коэффициентов (индекс = степень).
    """
    m = len(p_coeffs) - 1
    n = len(q_coeffs) - 1
    size = m + n
    s = np.zeros((size, size), dtype=complex)
    p_high = list(reversed(p_coeffs))
    q_high = list(reversed(q_coeffs))
    for i in range(n):
        s[i, i:i + m + 1] = p_high
    for i in range(m):
        s[n + i, i:i + n + 1] = q_high
    return s


def _sample(c: Poly, nodes: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(c(nodes), dtype=complex), nodes.shape)


def _split(p: Poly, var: str) -> Tuple[str, List[Poly]]:
    if p.nvars != 2:
        raise LabError("arity", f"elimination expects bivariate polynomials, got {p.variables}")
    other = [v for v in p.variables if v != var]
    if len(other) != 1:
        raise LabError("arity", f"{var} is not a variable of {p.variables}")
    return other[0], p.coefficients_in(var)


def eliminate(p: Poly, q: Poly, var: str) -> Elimination:
    """
    Исключает var из пары многочленов через результант Сильвестра.

    Определитель вычисляется численно в корнях из единицы и интерполируется
    быстрым преобразованием Фурье; степень результанта ограничена
    произведением полных степеней (Безу).

    Raises:
        LabError("degenerate"): один из многочленов нулевой
    """
    if p.is_zero() or q.is_zero():
        raise LabError("degenerate", "resultant of a zero polynomial")
    if set(p.variables) != set(q.variables):
        raise LabError("arity", f"variable mismatch: {p.variables} vs {q.variables}")
    if q.variables != p.variables:
        q = q.extend(p.variables)

    other, p_coeffs = _split(p, var)
    _, q_coeffs = _split(q, var)
    m, n = len(p_coeffs) - 1, len(q_coeffs) - 1

    bound = max(p.degree * q.degree, 0)
    samples = bound + 1
    nodes = np.exp(2j * np.pi * np.arange(samples) / samples)
    p_vals = np.array([_sample(c, nodes) for c in p_coeffs])
    q_vals = np.array([_sample(c, nodes) for c in q_coeffs])

    values = np.empty(samples, dtype=complex)
    for k in range(samples):
        values[k] = bareiss_determinant(sylvester_matrix(list(p_vals[:, k]), list(q_vals[:, k])))

    coeffs = np.fft.fft(values) / samples
    # Масштаб по оценке Адамара: ниже него коэффициенты считаем шумом округления
    scale = max(p.max_abs_coeff(), 1.0) ** n * max(q.max_abs_coeff(), 1.0) ** m
    noise = 1e-12 * scale
    terms = {(j,): c for j, c in enumerate(coeffs) if abs(c) > noise}
    resultant = Poly((other,), terms)

    if resultant.is_zero():
        logger.debug(f"Результант по {var} тождественно равен нулю")
    else:
        logger.debug(f"Результант по {var}: степень {resultant.degree}, отсчетов {samples}")

    return Elimination(resultant=resultant, lead_p=p_coeffs[-1], lead_q=q_coeffs[-1], var=var)


def resultant_eliminate(p: Poly, q: Poly, var: str) -> Poly:
    """Результант Res_var(p, q) как многочлен от оставшейся переменной"""
    return eliminate(p, q, var).resultant


def univariate_roots(p: Poly, rel_tol: float = 1e-12) -> np.ndarray:
    """
    Корни многочлена одной переменной как собственные числа сопровождающей матрицы.

    Старшие коэффициенты ниже rel_tol·max|c| отбрасываются (корни на бесконечности).
    """
    if p.nvars != 1:
        raise LabError("arity", f"expected a univariate polynomial, got {p.variables}")
    if p.is_zero():
        raise LabError("degenerate", "roots of the zero polynomial")
    coeffs = np.array([p.terms.get((k,), 0j) for k in range(p.degree + 1)], dtype=complex)
    scale = np.max(np.abs(coeffs))
    top = len(coeffs) - 1
    while top > 0 and abs(coeffs[top]) <= rel_tol * scale:
        top -= 1
    if top < len(coeffs) - 1:
        logger.warning(f"Отброшено {len(coeffs) - 1 - top} вырожденных старших коэффициентов")
    coeffs = coeffs[:top + 1]
    if top == 0:
        return np.zeros(0, dtype=complex)
    companion = np.polynomial.polynomial.polycompanion(coeffs)
    return np.linalg.eigvals(companion)
