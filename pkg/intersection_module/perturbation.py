import cmath
import math
from dataclasses import dataclass
from typing import Dict, Any, Tuple

from core.errors import LabError
from core.logging import get_logger
from leafgeom_module import SectorChart, bidisc_window

logger = get_logger()


@dataclass(frozen=True)
class PerturbationFamily:
    """
    Семейство Φ_ε(z, w) = (z + ε·a1, w + ε·b1) без членов старшего порядка.

    Особая точка возмущенного слоения сидит в (ε·a1, ε·b1), его листы: сдвиги
    модельных листов.
    """
    a1: complex
    b1: complex

    def __post_init__(self):
        if self.a1 == 0 or self.b1 == 0:
            raise LabError("config", f"perturbation needs a1, b1 ≠ 0, got ({self.a1}, {self.b1})")

    @property
    def ratio(self) -> complex:
        return complex(self.b1) / complex(self.a1)

    def check_lambda(self, lam: complex):
        """Возмущение не должно быть касательным: λ ≠ b1/a1"""
        if abs(complex(lam) - self.ratio) <= 1e-12 * max(1.0, abs(lam)):
            raise LabError("config", f"λ = {lam} coincides with b1/a1 = {self.ratio}")

    def limit_slope(self, lam: complex) -> complex:
        return complex(lam) * self.ratio

    def singular_point(self, eps: float) -> Tuple[complex, complex]:
        return eps * complex(self.a1), eps * complex(self.b1)

    def apply(self, z: complex, w: complex, eps: float) -> Tuple[complex, complex]:
        return z + eps * complex(self.a1), w + eps * complex(self.b1)

    def pull_back(self, z: complex, w: complex, eps: float) -> Tuple[complex, complex]:
        return z - eps * complex(self.a1), w - eps * complex(self.b1)

    def to_dict(self) -> Dict[str, Any]:
        a1, b1 = complex(self.a1), complex(self.b1)
        return {"a1": [a1.real, a1.imag], "b1": [b1.real, b1.imag]}


def perturbed_slope(fam: PerturbationFamily, lam: complex, point: Tuple[complex, complex], eps: float) -> complex:
    """
    Наклон dw/dz возмущенного слоения: λ(w − ε·b1)/(z − ε·a1).

    Raises:
        LabError("perturbed-singularity"): точка: особая точка возмущенного слоения
        LabError("vertical-slope"): точка на сепаратрисе z = ε·a1
    """
    z, w = fam.pull_back(complex(point[0]), complex(point[1]), eps)
    if z == 0:
        if w == 0:
            raise LabError("perturbed-singularity", f"{point} is the singular point for ε = {eps}")
        raise LabError("vertical-slope", f"{point} lies on the separatrix z = ε·a1")
    return complex(lam) * w / z


def _shift(chart: SectorChart, alpha: complex) -> float:
    if alpha == 0:
        raise LabError("arity", "α = 0 is not a leaf parameter")
    return math.log(abs(alpha)) / chart.b


def plaque_zeta(chart: SectorChart, alpha: complex, n: int, z: complex) -> complex:
    """
    ζ точки плакетки L_{α,n} над данным z.

    Ветвь выбирается условием u ∈ [2nπ, 2(n+1)π); v = −log|z|.

    Raises:
        LabError("off-plaque"): z = 0 или точка вне замкнутого окна бидиска
    """
    z = complex(z)
    if z == 0:
        raise LabError("off-plaque", "z = 0 is the separatrix")
    u0 = cmath.phase(z) - _shift(chart, alpha)
    k = math.ceil((2 * math.pi * n - u0) / (2 * math.pi))
    u = u0 + 2 * math.pi * k
    if u >= 2 * math.pi * (n + 1):
        u -= 2 * math.pi
    zeta = complex(u, -math.log(abs(z)))
    if not bidisc_window(chart, zeta, closed=True):
        raise LabError("off-plaque", f"z = {z} is outside the window of plaque {n}")
    return zeta


def plaque_graph(chart: SectorChart, alpha: complex, n: int, z: complex) -> complex:
    """w точки плакетки L_{α,n} над z"""
    zeta = plaque_zeta(chart, alpha, n, z)
    return complex(alpha) * cmath.exp(1j * chart.lam * (zeta + _shift(chart, alpha)))


def perturbed_plaque_graph(chart: SectorChart, fam: PerturbationFamily, beta: complex, m: int,
                           eps: float, z: complex) -> complex:
    """w точки возмущенной плакетки Φ_ε(L_{β,m}) над z"""
    return eps * complex(fam.b1) + plaque_graph(chart, beta, m, z - eps * complex(fam.a1))


def slope_along_plaque(chart: SectorChart, alpha: complex, zeta: complex) -> complex:
    """Наклон S = λw/z модельного листа в точке ζ; dS/dζ = i(λ − 1)S"""
    t = complex(zeta) + _shift(chart, alpha)
    return chart.lam * complex(alpha) * cmath.exp(1j * (chart.lam - 1) * t)


def slope_variation(chart: SectorChart, alpha: complex, zeta: complex, h: float = 1e-4) -> Tuple[complex, complex]:
    """(центральная разность dS/dζ, i(λ − 1)·S)"""
    numeric = (slope_along_plaque(chart, alpha, zeta + h) - slope_along_plaque(chart, alpha, zeta - h)) / (2 * h)
    return numeric, 1j * (chart.lam - 1) * slope_along_plaque(chart, alpha, zeta)
