import math
from dataclasses import dataclass, asdict
from typing import Optional, Dict, Any, Tuple

from core.config import get_config
from core.errors import LabError
from leafgeom_module import SectorChart
from intersection_module.perturbation import PerturbationFamily

D1 = "D1"
D2 = "D2"
D3 = "D3"
OUTSIDE = "outside"

CASE_1 = "case-1"
CASE_1_MIRROR = "case-1'"
CASE_2 = "case-2"


@dataclass(frozen=True)
class RegionConstants:
    """Константы разбиения окрестности особой точки"""
    c: float
    C: float
    delta: float
    C1: float
    r: float
    s: float
    d: float

    def __post_init__(self):
        if not 0 < self.r < self.c < self.C:
            raise LabError("config", f"need 0 < r < c < C, got r={self.r}, c={self.c}, C={self.C}")
        if not self.delta > 0 or not self.C1 > 1:
            raise LabError("config", f"need δ > 0 and C1 > 1, got δ={self.delta}, C1={self.C1}")
        if not 0 < self.s < 1 or not self.d > 0:
            raise LabError("config", f"need 0 < s < 1 and d > 0, got s={self.s}, d={self.d}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def default_s(chart: SectorChart) -> float:
    """s с 1/2 < 1 + 2sbπ/a < 3/2; для a = 0 условие пусто"""
    if chart.a == 0:
        return 0.5
    return min(0.5, abs(chart.a) / (8 * math.pi * chart.b))


def resolve_constants(chart: SectorChart, fam: PerturbationFamily, **overrides) -> RegionConstants:
    """Константы из секции intersection конфигурации; C и s по умолчанию выводятся из λ и Φ"""
    cfg = get_config().intersection
    values = {"c": cfg.c, "C": cfg.C, "delta": cfg.delta, "C1": cfg.C1, "r": cfg.r, "s": cfg.s, "d": cfg.d}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if values["C"] is None:
        values["C"] = 3 * max(abs(fam.a1), abs(fam.b1))
    if values["s"] is None:
        values["s"] = default_s(chart)
    return RegionConstants(**values)


@dataclass(frozen=True)
class RegionLabel:
    major: str
    sub: Optional[str] = None
    case: Optional[str] = None

    def __str__(self) -> str:
        return "/".join(part for part in (self.major, self.sub, self.case) if part)

    def to_dict(self) -> Dict[str, Any]:
        return {"major": self.major, "sub": self.sub, "case": self.case}


def _d1_case(z: complex, w: complex, consts: RegionConstants, fam: PerturbationFamily,
             lam: complex) -> str:
    # η: пересечение касательной прямой наклона λ·b1/a1 с осью z
    slope = fam.limit_slope(lam)
    eta = z - w / slope
    if abs(z - eta) < consts.d * abs(eta):
        return CASE_1
    if abs(w + slope * eta) < consts.d * abs(eta):
        return CASE_1_MIRROR
    return CASE_2


def classify_region(point: Tuple[complex, complex], eps: float, consts: RegionConstants,
                    fam: Optional[PerturbationFamily] = None, lam: Optional[complex] = None) -> RegionLabel:
    """
    Метка области точки: D1 ⊂ D2 ⊂ D3 по бидискам радиусов cε, Cε, δ, затем подобласти.

    Разбиение D1 на случаи считается только при заданных fam и λ; для R2A
    с fam учитывается и индикатриса w = ε·b1.
    """
    if not eps > 0:
        raise LabError("config", f"region classification needs ε > 0, got {eps}")
    z, w = complex(point[0]), complex(point[1])
    az, aw = abs(z), abs(w)
    small, mid = consts.c * eps, consts.C * eps

    if az <= small and aw <= small:
        case = _d1_case(z, w, consts, fam, lam) if fam is not None and lam is not None else None
        return RegionLabel(D1, case=case)
    if az <= mid and aw <= mid:
        if az > small and aw < consts.r * eps:
            return RegionLabel(D2, "A")
        if aw > small and az < consts.r * eps:
            return RegionLabel(D2, "A'")
        return RegionLabel(D2, "B")
    if az > consts.delta or aw > consts.delta:
        return RegionLabel(OUTSIDE)

    if az > mid and aw > mid:
        if consts.C1 * aw <= az:
            return RegionLabel(D3, "R1A")
        if consts.C1 * az <= aw:
            return RegionLabel(D3, "R1B")
        return RegionLabel(D3, "R1C")
    if az > mid:
        near = aw < consts.s * eps
        if fam is not None:
            near = near or abs(w - eps * complex(fam.b1)) < consts.s * eps
        return RegionLabel(D3, "R2A" if near else "R2B")
    return RegionLabel(D3, "R3")
