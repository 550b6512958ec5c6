import math
from dataclasses import dataclass
from typing import Union, Tuple, Dict, Any, Sequence

import numpy as np

from core.errors import LabError
from leafgeom_module.sector_chart import SectorChart, plaque_index, _lam


@dataclass(frozen=True)
class LeafPoint:
    """
    Точка модельного листа: пара (α, ζ) определяющая, (z, w) производные.
    """
    alpha: complex
    zeta: complex
    z: complex
    w: complex
    plaque_n: int

    @property
    def u(self) -> float:
        return self.zeta.real

    @property
    def v(self) -> float:
        return self.zeta.imag

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": [self.alpha.real, self.alpha.imag],
            "zeta": [self.zeta.real, self.zeta.imag],
            "z": [self.z.real, self.z.imag],
            "w": [self.w.real, self.w.imag],
            "plaque": self.plaque_n
        }


def _shift(lam: complex, alpha: complex) -> float:
    if alpha == 0:
        raise LabError("arity", "α = 0 is the separatrix w = 0, not a leaf parameter")
    if lam.imag == 0:
        raise LabError("not-normalized", "real λ has no sector parametrization")
    return math.log(abs(alpha)) / lam.imag


def psi_param(chart: Union[SectorChart, complex], alpha: complex, zeta: complex) -> LeafPoint:
    """
    ψ_α(ζ): z = e^{i(ζ + log|α|/b)}, w = α·e^{iλ(ζ + log|α|/b)}.
    """
    lam = _lam(chart)
    alpha, zeta = complex(alpha), complex(zeta)
    t = zeta + _shift(lam, alpha)
    z = np.exp(1j * t)
    w = alpha * np.exp(1j * lam * t)
    return LeafPoint(alpha=alpha, zeta=zeta, z=complex(z), w=complex(w), plaque_n=plaque_index(zeta.real))


def psi_array(chart: Union[SectorChart, complex], alpha: complex, zeta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Векторизованный ψ_α по массиву ζ"""
    lam = _lam(chart)
    t = np.asarray(zeta, dtype=complex) + _shift(lam, complex(alpha))
    return np.exp(1j * t), complex(alpha) * np.exp(1j * lam * t)


def model_tangency(lam: complex, z: complex, w: complex, dz: complex, dw: complex) -> float:
    """|z·dw − λ·w·dz| / (|z||w|(1 + |λ|)): касание модельной формы zdw − λwdz"""
    denom = abs(z) * abs(w) * (1 + abs(lam))
    if denom == 0:
        return 0.0
    return abs(z * dw - lam * w * dz) / denom


def tangency_residual(chart: Union[SectorChart, complex], alpha: complex, zeta: complex) -> float:
    """Невязка касания ψ_α с точными производными dz/dζ = iz, dw/dζ = iλw"""
    lam = _lam(chart)
    p = psi_param(lam, alpha, zeta)
    return model_tangency(lam, p.z, p.w, 1j * p.z, 1j * lam * p.w)


def leaf_coordinates(chart: Union[SectorChart, complex], z: complex, w: complex,
                     normalize_alpha: bool = True) -> Tuple[complex, complex]:
    """
    Обратное к ψ: по (z, w) с z, w ≠ 0 находит (α, ζ).

    Ветвь логарифма выбирается так, что α лежит в фундаментальном кольце
    e^{−2πb} ≤ |α| < 1 (если normalize_alpha), иначе 0 ≤ u + log|α|/b < 2π.
    """
    lam = _lam(chart)
    z, w = complex(z), complex(w)
    if z == 0 or w == 0:
        raise LabError("arity", "points on the separatrices have no leaf coordinates")
    b = lam.imag
    s = -1j * np.log(z)  # t = ζ + log|α|/b по модулю 2π
    alpha = w * np.exp(-1j * lam * s)
    if normalize_alpha:
        if b <= 0:
            raise LabError("not-normalized", "the fundamental annulus needs Im λ > 0")
        # Сдвиг t на 2πk умножает |α| на e^{2πbk}
        k = math.floor(-math.log(abs(alpha)) / (2 * math.pi * b))
        s = s + 2 * math.pi * k
        alpha = w * np.exp(-1j * lam * s)
    zeta = s - _shift(lam, alpha)
    return complex(alpha), complex(zeta)


def model_polyline(chart: Union[SectorChart, complex], alpha: complex, zetas: Sequence[complex]) -> np.ndarray:
    """Полилиния ψ_α по сетке ζ: строки (re ζ, im ζ, re z, im z, re w, im w)"""
    zetas = np.asarray(zetas, dtype=complex)
    z, w = psi_array(chart, alpha, zetas)
    return np.column_stack([zetas.real, zetas.imag, z.real, z.imag, w.real, w.imag])
