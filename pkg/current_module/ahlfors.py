import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.errors import LabError
from core.logging import get_logger
from harmonic_module import BoundaryFunction, poisson_extend, weighted_norm
from leafgeom_module import SectorChart, psi_array
from current_module.empirical_current import EmpiricalCurrent, normalized_current

logger = get_logger()

DEFAULT_ALPHA = 0.5 * complex(math.cos(0.3), math.sin(0.3))


@dataclass(frozen=True)
class ModelGrid:
    """
    Сетка единичного бидиска модельной точки.

    Коробки: клетки по z (кольца по log|z| глубины depth × секторы по arg z),
    бины: такие же клетки по трансверсальной координате w.
    """
    rings: int = 8
    sectors: int = 8
    depth: float = 4.0

    @property
    def n_boxes(self) -> int:
        return self.rings * self.sectors

    @property
    def n_bins(self) -> int:
        return self.rings * self.sectors

    @property
    def signature(self) -> Tuple:
        return ("model-bidisc", self.rings, self.sectors, self.depth)

    def _cell(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_r = np.log(np.abs(x))
        ring = np.clip(np.floor((log_r + self.depth) / self.depth * self.rings), 0, self.rings - 1)
        sector = np.clip(np.floor((np.angle(x) + math.pi) / (2 * math.pi) * self.sectors), 0, self.sectors - 1)
        return (ring * self.sectors + sector).astype(int)

    def locate(self, z, w) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(коробка, бин, маска точек внутри открытого бидиска)"""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        valid = (np.abs(z) < 1) & (np.abs(w) < 1)
        return self._cell(z), self._cell(w), valid


def _harmonic_weight(H: BoundaryFunction, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    if H.exact is not None:
        return np.vectorize(H.exact, otypes=[float])(U, V)
    return np.array([poisson_extend(H, (u, v)) for u, v in zip(U.ravel(), V.ravel())]).reshape(U.shape)


def _bin_masses(grid: ModelGrid, z: np.ndarray, w: np.ndarray, mass: np.ndarray) -> np.ndarray:
    counts = np.zeros((grid.n_boxes, grid.n_bins))
    box, bin_, valid = grid.locate(z.ravel(), w.ravel())
    np.add.at(counts, (box[valid], bin_[valid]), mass.ravel()[valid])
    return counts


def ahlfors_average_model(chart: SectorChart, r: float, H: Optional[BoundaryFunction] = None,
                          alpha: complex = DEFAULT_ALPHA, grid: Optional[ModelGrid] = None,
                          n_radial: int = 64, n_angular: int = 128) -> EmpiricalCurrent:
    """
    Усреднение Альфорса на модельном листе: образ меры log⁺(r/|x|)·dA диска |x| < r
    при явном накрытии x ↦ W = i(1 + x)/(1 − x) ↦ ζ = W^{1/γ} ↦ ψ_α(ζ).

    Плотность: площадь листа |φ'|²; с H она дополнительно умножается на P[H̃](W).
    Квадратура: Гаусс–Лежандр по |x|, равномерная по arg x.

    Raises:
        LabError("config"): r вне (0, 1)
    """
    if not 0 < r < 1:
        raise LabError("config", f"Ahlfors radius must lie in (0, 1), got {r}")
    grid = ModelGrid() if grid is None else grid
    nodes, gl_weights = np.polynomial.legendre.leggauss(n_radial)
    rho = r * (nodes + 1) / 2
    theta = 2 * math.pi * np.arange(n_angular) / n_angular
    x = rho[:, None] * np.exp(1j * theta)[None, :]

    W = 1j * (1 + x) / (1 - x)
    zeta = np.power(W, 1 / chart.gamma)
    z, w = psi_array(chart, alpha, zeta)
    speed2 = (np.abs(z) ** 2 + abs(chart.lam) ** 2 * np.abs(w) ** 2) \
        * np.abs(zeta / (chart.gamma * W)) ** 2 * np.abs(2 / (1 - x) ** 2) ** 2
    measure = (r / 2 * gl_weights * rho * np.log(r / rho))[:, None] * (2 * math.pi / n_angular) * speed2
    if H is not None:
        measure = measure * _harmonic_weight(H, W.real, W.imag)

    counts = _bin_masses(grid, z, w, measure)
    provenance = {"kind": "ahlfors", "r": r, "lambda": [chart.a, chart.b], "alpha": [alpha.real, alpha.imag],
                  "weighted": H is not None}
    logger.debug(f"Усреднение Альфорса r = {r}: масса {counts.sum():.6g}")
    return normalized_current(grid.signature, counts, provenance=provenance)


def model_current(chart: SectorChart, H: BoundaryFunction, grid: Optional[ModelGrid] = None,
                  n_alpha: Tuple[int, int] = (8, 8), n_radial: int = 64, n_angular: int = 64,
                  r_max: float = 1e3) -> EmpiricalCurrent:
    """
    Ток T = ∫ h_α [V_α] dμ(α) модельной точки с h_α(ζ) = P[H̃](ζ^γ).

    μ равномерна по (log|α|, arg α) на фундаментальном кольце (инвариантна относительно
    голономии). Листы обрезаются по |ζ^γ| ≤ r_max; масса конечна ровно тогда,
    когда конечна весовая норма H̃.

    Raises:
        LabError("divergent-boundary-data"): весовая норма H̃ бесконечна
    """
    grid = ModelGrid() if grid is None else grid
    norm = weighted_norm(H, chart.gamma)

    nodes, gl_weights = np.polynomial.legendre.leggauss(n_radial)
    rho_max = r_max ** (1 / chart.gamma)
    rho = rho_max * (nodes + 1) / 2
    t_nodes, t_weights = np.polynomial.legendre.leggauss(n_angular)
    theta = chart.theta_max * (t_nodes + 1) / 2
    zeta = rho[:, None] * np.exp(1j * theta)[None, :]
    area = (rho_max / 2 * gl_weights * rho)[:, None] * (chart.theta_max / 2 * t_weights)[None, :]
    W = np.power(zeta, chart.gamma)
    h = _harmonic_weight(H, W.real, np.maximum(W.imag, 1e-300))

    n_mod, n_arg = n_alpha
    log_lo = -2 * math.pi * chart.b
    counts = np.zeros((grid.n_boxes, grid.n_bins))
    for i in range(n_mod):
        modulus = math.exp(log_lo * (1 - (i + 0.5) / n_mod))
        for j in range(n_arg):
            alpha = modulus * np.exp(2j * math.pi * (j + 0.5) / n_arg)
            z, w = psi_array(chart, alpha, zeta)
            density = h * (np.abs(z) ** 2 + abs(chart.lam) ** 2 * np.abs(w) ** 2) * area
            counts += _bin_masses(grid, z, w, density)

    provenance = {"kind": "model-current", "lambda": [chart.a, chart.b], "boundary": H.description,
                  "weighted_norm": norm, "r_max": r_max}
    logger.info(f"Модельный ток для λ = {chart.lam}: весовая норма {norm:.6g}")
    return normalized_current(grid.signature, counts, provenance=provenance)
