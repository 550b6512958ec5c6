from typing import Optional, Sequence, Tuple

import numpy as np

from core.errors import LabError
from foliation_module import FoliationForm, chart_transition

# Ниже этой нормы поле X считается нулевым (точка особая)
SINGULAR_NORM = 1e-9


def field_at(f: FoliationForm, chart: int, p: Sequence[complex]) -> np.ndarray:
    """Значение направляющего поля X = (beta, −alpha) в точке карты"""
    x, y = f.vector_field(chart)
    return np.array([x(p), y(p)], dtype=complex)


def line_field_at(f: FoliationForm, chart: int, p: Sequence[complex],
                  previous: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Единичный вектор линейного поля слоения в точке.

    Направление определено с точностью до фазы; если задан previous,
    фаза выбирается так, что <X, previous> вещественно и положительно.

    Raises:
        LabError("at-singularity"): ‖X‖ < 1e−9
    """
    p = np.asarray(p, dtype=complex)
    v = field_at(f, chart, p)
    norm = np.linalg.norm(v)
    if norm < SINGULAR_NORM:
        raise LabError("at-singularity", f"line field vanishes at {p} in chart {chart}")
    v = v / norm
    if previous is not None:
        overlap = np.vdot(v, previous)
        if abs(overlap) > 0:
            v = v * (overlap / abs(overlap))
    return v


def tangency(f: FoliationForm, chart: int, p: Sequence[complex], tangent: Sequence[complex]) -> float:
    """|ω1(t)| / (‖ω1‖·‖t‖): нуль для касательных к листу векторов"""
    alpha, beta = f.chart_form(chart)
    p = np.asarray(p, dtype=complex)
    t = np.asarray(tangent, dtype=complex)
    a, b = alpha(p), beta(p)
    denom = np.hypot(abs(a), abs(b)) * np.linalg.norm(t)
    if denom == 0:
        return 0.0
    return float(abs(a * t[0] + b * t[1]) / denom)


def transition_jacobian(from_chart: int, to_chart: int, p: Sequence[complex], h: float = 1e-7) -> np.ndarray:
    """Комплексный якобиан отображения смены карт (центральные разности, отображение голоморфно)"""
    p = np.asarray(p, dtype=complex)
    columns = []
    for k in range(2):
        step = np.zeros(2, dtype=complex)
        step[k] = h
        columns.append((chart_transition(from_chart, to_chart, p + step)
                        - chart_transition(from_chart, to_chart, p - step)) / (2 * h))
    return np.column_stack(columns)


def refit_phase(f: FoliationForm, from_chart: int, to_chart: int, p: Sequence[complex],
                phase: complex) -> Tuple[np.ndarray, complex]:
    """
    Перенос ориентации линейного поля при смене карты.

    Касательный вектор phase·X/|X| переносится якобианом смены карт;
    возвращает точку в новой карте и фазу e^{iθ} поля в ней.
    """
    p = np.asarray(p, dtype=complex)
    old = phase * line_field_at(f, from_chart, p)
    q = chart_transition(from_chart, to_chart, p)
    expected = transition_jacobian(from_chart, to_chart, p) @ old
    new = line_field_at(f, to_chart, q)
    c = np.vdot(new, expected)
    return q, complex(c / abs(c))
