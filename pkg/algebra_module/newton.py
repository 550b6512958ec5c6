from typing import Sequence, Tuple, Optional

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from algebra_module.poly import Poly, partial_derivative
from monitoring import record_newton

logger = get_logger()

# Отношение соседних шагов, выше которого сходимость считается линейной (кратный корень)
_LINEAR_RATE = 0.25


def complex_point(coords: Sequence[complex], size: Optional[int] = None) -> np.ndarray:
    """Проверяет и приводит координаты к вектору complex128"""
    point = np.asarray(coords, dtype=complex).reshape(-1)
    if size is not None and point.size != size:
        raise LabError("arity", f"expected {size} coordinates, got {point.size}")
    if not np.all(np.isfinite(point)):
        raise LabError("arity", f"non-finite coordinates: {point}")
    return point


def jacobian(system: Tuple[Poly, Poly]):
    """Символьный якобиан пары многочленов от двух переменных"""
    p, q = system
    return [[partial_derivative(f, v) for v in p.variables] for f in (p, q)]


def newton_polish(system: Tuple[Poly, Poly], guess: Sequence[complex],
                  tol: Optional[float] = None, max_iter: Optional[int] = None) -> np.ndarray:
    """
    Уточняет общий корень пары многочленов методом Ньютона.

    Args:
        system: пара многочленов от одних и тех же двух переменных
        guess: начальное приближение
        tol: допуск невязки в max-норме
        max_iter: максимальное число итераций

    Returns:
        Точка с невязкой меньше tol

    Raises:
        LabError("jacobian-singular"): якобиан вырожден или корень кратный
        LabError("no-convergence"): итерации исчерпаны
    """
    cfg = get_config().algebra
    tol = cfg.newton_tol if tol is None else tol
    max_iter = cfg.newton_max_iter if max_iter is None else max_iter

    p, q = system
    if p.variables != q.variables or p.nvars != 2:
        raise LabError("arity", "newton_polish expects two polynomials in the same two variables")
    jac = jacobian(system)
    x = complex_point(guess, 2)

    steps = []
    for iteration in range(max_iter + 1):
        f = np.array([p(x), q(x)])
        residual = np.max(np.abs(f))
        if residual < tol:
            # Линейная сходимость на последних шагах означает вырожденный якобиан в корне
            rates = [steps[i + 1] / steps[i] for i in range(len(steps) - 1) if steps[i] > 0]
            if len(rates) >= 3 and all(r > _LINEAR_RATE for r in rates[-3:]):
                record_newton("jacobian-singular")
                raise LabError("jacobian-singular", f"linear convergence to a multiple root near {x}")
            record_newton("ok")
            logger.debug(f"Ньютон сошелся за {iteration} итераций, невязка {residual:.3e}")
            return x
        if iteration == max_iter:
            break

        j = np.array([[jac[r][c](x) for c in range(2)] for r in range(2)])
        if not np.all(np.isfinite(j)) or np.linalg.cond(j) > cfg.jacobian_cond_cap:
            record_newton("jacobian-singular")
            raise LabError("jacobian-singular", f"Jacobian condition above {cfg.jacobian_cond_cap:g} at {x}")
        step = np.linalg.solve(j, f)
        x = x - step
        if not np.all(np.isfinite(x)):
            break
        steps.append(float(np.max(np.abs(step))))

    record_newton("no-convergence")
    raise LabError("no-convergence", f"Newton did not reach {tol:g} in {max_iter} iterations")
