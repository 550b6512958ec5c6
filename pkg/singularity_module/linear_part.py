from typing import Tuple, List, Optional, Sequence

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from foliation_module import FoliationForm, form_residual, vector_field_jacobian

logger = get_logger()

SWAP_AXES = "swap-axes"
CONJUGATE_ORIENTATION = "conjugate-orientation"

HYPERBOLIC = "hyperbolic"
RESONANT_REAL = "resonant-real"
DEGENERATE = "degenerate"


def linear_part(f: FoliationForm, p: Sequence[complex], chart: int = 0,
                residual_tol: Optional[float] = None) -> np.ndarray:
    """
    Якобиан направляющего поля X = (beta, −alpha) в особой точке.

    Raises:
        LabError("not-singular"): точка не особая
    """
    if residual_tol is None:
        residual_tol = get_config().singularity.singular_residual
    p = np.asarray(p, dtype=complex)
    residual = form_residual(f, chart, p)
    if residual >= residual_tol:
        raise LabError("not-singular", f"residual {residual:.3e} at {p} in chart {chart}")
    jac = vector_field_jacobian(f, chart)
    return np.array([[jac[r][c](p) for c in range(2)] for r in range(2)], dtype=complex)


def lambda_of(m: np.ndarray) -> Tuple[complex, complex, complex]:
    """
    Отношение собственных чисел λ = μ2/μ1, упорядоченных так, что Im λ ≥ 0.

    Returns:
        (λ, μ1, μ2)

    Raises:
        LabError("degenerate-singularity"): нулевое собственное число
        LabError("non-semisimple"): жорданов блок
    """
    m = np.asarray(m, dtype=complex)
    norm = max(np.max(np.abs(m)), 1e-300)
    mu = np.linalg.eigvals(m)
    if np.min(np.abs(mu)) < 1e-12 * norm:
        raise LabError("degenerate-singularity", f"zero eigenvalue in {mu}")
    mu1, mu2 = complex(mu[0]), complex(mu[1])
    if abs(mu1 - mu2) < 1e-9 * norm:
        # Кратное собственное число: полупросто только для скалярной матрицы
        if np.max(np.abs(m - mu1 * np.eye(2))) > 1e-9 * norm:
            raise LabError("non-semisimple", f"defective linear part with eigenvalue {mu1}")
        return 1.0 + 0j, mu1, mu2
    lam = mu2 / mu1
    if lam.imag < 0:
        mu1, mu2 = mu2, mu1
        lam = mu2 / mu1
    return lam, mu1, mu2


def classify_hyperbolic(lam: complex, tol_im: Optional[float] = None) -> str:
    """hyperbolic ⇔ |Im λ| > tol_im"""
    if tol_im is None:
        tol_im = get_config().singularity.tol_im
    lam = complex(lam)
    if not np.isfinite(lam) or lam == 0:
        return DEGENERATE
    if abs(lam.imag) > tol_im:
        return HYPERBOLIC
    return RESONANT_REAL


def normalize_lambda(lam: complex, band: Optional[float] = None) -> Tuple[complex, List[str]]:
    """
    Нормализация λ заменой осей (λ → 1/λ).

    Сначала уходим из полосы |Re λ − 1| < band, затем добиваемся Im λ > 0,
    если замена не возвращает Re λ в полосу. Первое правило главнее.
    Если Im λ < 0 остается, в журнал пишется conjugate-orientation: карта
    модельного листа строится по сопряженному λ (sector_of с allow_mirror).
    """
    if band is None:
        band = get_config().singularity.degeneracy_band
    lam = complex(lam)
    moves: List[str] = []
    if abs(lam.real - 1) < band:
        lam = 1 / lam
        moves.append(SWAP_AXES)
    if lam.imag < 0:
        flipped = 1 / lam
        if abs(flipped.real - 1) >= band:
            lam = flipped
            moves.append(SWAP_AXES)
        else:
            moves.append(CONJUGATE_ORIENTATION)
            logger.debug(f"λ = {lam:.6g} оставлено с Im < 0: замена осей возвращает Re λ к 1")
    return lam, moves
