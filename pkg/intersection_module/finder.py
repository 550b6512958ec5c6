import cmath
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Dict, Any

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from leafgeom_module import SectorChart, EDGE_TOL, bidisc_window, plaque_bounds
from monitoring import record_intersection, record_unresolved_box, record_newton
from intersection_module.perturbation import PerturbationFamily, plaque_graph, perturbed_plaque_graph
from intersection_module.regions import RegionConstants, RegionLabel, resolve_constants, classify_region

logger = get_logger()

# Коробки меньше этого с числом вращения ≥ 2 считаются одной кратной точкой
CLUSTER = 1e-3
NEWTON_ITER = 80
RESIDUAL_TOL = 1e-9
MAX_REFINE = 4


@dataclass(frozen=True)
class SearchWindow:
    """Часть плакетки, где ищутся пересечения: |z|, |w| ≤ radius и |z| ≥ z_floor"""
    radius: float = 1.0
    z_floor: float = 1e-8

    def __post_init__(self):
        if not 0 < self.z_floor < self.radius <= 1:
            raise LabError("config", f"need 0 < z_floor < radius ≤ 1, got {self.z_floor}, {self.radius}")


@dataclass
class IntersectionPoint:
    z: complex
    w: complex
    zeta: complex
    zeta_p: complex
    residuals: Tuple[float, float]
    multiplicity: int = 1
    region: Optional[RegionLabel] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "z": [self.z.real, self.z.imag],
            "w": [self.w.real, self.w.imag],
            "zeta": [self.zeta.real, self.zeta.imag],
            "zeta_prime": [self.zeta_p.real, self.zeta_p.imag],
            "residuals": list(self.residuals),
            "multiplicity": self.multiplicity,
            "region": str(self.region) if self.region else None
        }


@dataclass
class IntersectionRecord:
    """Пересечение плакетки L_{α,n} с возмущенной плакеткой Φ_ε(L_{β,m})"""
    chart: SectorChart
    alpha: complex
    n: int
    beta: complex
    m: int
    eps: float
    points: List[IntersectionPoint] = field(default_factory=list)
    unresolved: int = 0
    excluded: int = 0
    boxes: int = 0
    # исходы Ньютона: converged/failed
    newton: Counter = field(default_factory=Counter)

    @property
    def count(self) -> int:
        return sum(p.multiplicity for p in self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": [self.alpha.real, self.alpha.imag],
            "n": self.n,
            "beta": [self.beta.real, self.beta.imag],
            "m": self.m,
            "eps": self.eps,
            "count": self.count,
            "unresolved": self.unresolved,
            "excluded": self.excluded,
            "boxes": self.boxes,
            "points": [p.to_dict() for p in self.points]
        }


class _Sheet:
    """
    Уравнение пересечения в координате ζ плакетки L_{α,n}.

    Прообраз точки на возмущенном листе: z' = z − ε·a1 = e^{i t'}, t' = ζ' + log|β|/b.
    Вне круга |z| < ε|a1| t' = t − i·Log(1 − x), x = ε·a1·e^{−it}; внутри
    t' = −i·(Log(−ε·a1) + Log(1 − 1/x)). Обе формулы аналитичны в своей полосе по v,
    ветвь (сдвиг голономии) задается целым j.
    """

    def __init__(self, chart: SectorChart, fam: PerturbationFamily, alpha: complex, beta: complex, eps: float):
        self.chart, self.lam = chart, chart.lam
        self.alpha, self.beta = complex(alpha), complex(beta)
        self.eps, self.fam = eps, fam
        self.c_a = math.log(abs(self.alpha)) / chart.b
        self.c_b = math.log(abs(self.beta)) / chart.b
        self.eta = eps * complex(fam.a1)
        self.shift_w = eps * complex(fam.b1)
        if self.eta != 0:
            self.v_star = -math.log(abs(self.eta))
            self.log_neg_eta = cmath.log(-self.eta)
        else:
            self.v_star = math.inf
            self.log_neg_eta = None

    def t_prime(self, zeta, j: int, inner: bool):
        t = np.asarray(zeta, dtype=complex) + self.c_a
        if inner:
            y = np.exp(1j * t) / self.eta
            tp = -1j * (self.log_neg_eta + np.log(1 - y)) + 2 * math.pi * j
            dtp = -y / (1 - y)
        else:
            x = self.eta * np.exp(-1j * t)
            tp = t - 1j * np.log(1 - x) + 2 * math.pi * j
            dtp = 1 / (1 - x)
        return t, tp, dtp

    def zeta_prime(self, zeta, j: int, inner: bool):
        return self.t_prime(zeta, j, inner)[1] - self.c_b

    def value(self, zeta, j: int, inner: bool):
        t, tp, _ = self.t_prime(zeta, j, inner)
        with np.errstate(over="ignore", invalid="ignore"):
            return self.alpha * np.exp(1j * self.lam * t) - self.shift_w - self.beta * np.exp(1j * self.lam * tp)

    def newton_terms(self, zeta: complex, j: int, inner: bool) -> Tuple[complex, complex, float]:
        t, tp, dtp = self.t_prime(zeta, j, inner)
        left = self.alpha * np.exp(1j * self.lam * t)
        right = self.beta * np.exp(1j * self.lam * tp)
        g = left - self.shift_w - right
        dg = 1j * self.lam * (left - right * dtp)
        return complex(g), complex(dg), float(abs(left) + abs(self.shift_w) + abs(right))

    def poles(self, n: int) -> List[complex]:
        """Точки z = ε·a1 (особая точка возмущенного слоения) в полосе плакетки n"""
        if self.eta == 0:
            return []
        u0 = cmath.phase(self.eta) - self.c_a
        k = math.ceil((2 * math.pi * n - u0) / (2 * math.pi))
        u = u0 + 2 * math.pi * k
        return [complex(u + 2 * math.pi * s, self.v_star) for s in (-1, 0, 1)]


def _halves(sheet: _Sheet, v_lo: float, v_hi: float) -> List[Tuple[float, float, bool]]:
    if sheet.v_star <= v_lo:
        return [(v_lo, v_hi, True)]
    if sheet.v_star >= v_hi:
        return [(v_lo, v_hi, False)]
    return [(v_lo, sheet.v_star, False), (sheet.v_star, v_hi, True)]


def _contour(box: Tuple[float, float, float, float], per_edge: int) -> np.ndarray:
    u0, u1, v0, v1 = box
    s = np.arange(per_edge) / per_edge
    return np.concatenate([
        (u0 + (u1 - u0) * s) + 1j * v0,
        u1 + 1j * (v0 + (v1 - v0) * s),
        (u1 - (u1 - u0) * s) + 1j * v1,
        u0 + 1j * (v1 - (v1 - v0) * s)
    ])


def _winding(sheet: _Sheet, box, j: int, inner: bool, samples: int) -> Optional[int]:
    """Число нулей в коробке по принципу аргумента; None: контур не разрешен"""
    per_edge = samples
    for _ in range(MAX_REFINE + 1):
        values = sheet.value(_contour(box, per_edge), j, inner)
        if not np.all(np.isfinite(values)) or np.any(values == 0):
            return None
        steps = np.angle(np.roll(values, -1) / values)
        if np.max(np.abs(steps)) < math.pi / 2:
            return int(round(np.sum(steps) / (2 * math.pi)))
        per_edge *= 2
    return None


def _newton(sheet: _Sheet, zeta: complex, j: int, inner: bool, tally: Counter) -> Optional[complex]:
    for _ in range(NEWTON_ITER):
        g, dg, scale = sheet.newton_terms(zeta, j, inner)
        if not math.isfinite(abs(g)) or dg == 0:
            break
        step = g / dg
        zeta -= step
        if abs(step) <= 1e-15 * max(1.0, abs(zeta)):
            break
    g, _, scale = sheet.newton_terms(zeta, j, inner)
    if math.isfinite(abs(g)) and abs(g) <= 1e-10 * scale:
        tally["converged"] += 1
        return zeta
    tally["failed"] += 1
    return None


def _inside(box, zeta: complex, pad: float) -> bool:
    u0, u1, v0, v1 = box
    return u0 - pad <= zeta.real <= u1 + pad and v0 - pad <= zeta.imag <= v1 + pad


def _touches(box, point: complex, radius: float) -> bool:
    u0, u1, v0, v1 = box
    du = max(u0 - point.real, 0.0, point.real - u1)
    dv = max(v0 - point.imag, 0.0, point.imag - v1)
    return math.hypot(du, dv) <= radius


def _split(box):
    u0, u1, v0, v1 = box
    um, vm = (u0 + u1) / 2, (v0 + v1) / 2
    return [(u0, um, v0, vm), (um, u1, v0, vm), (u0, um, vm, v1), (um, u1, vm, v1)]


def _initial_boxes(u_range, v0: float, v1: float) -> List[Tuple[float, float, float, float]]:
    side = math.pi / 4
    us = np.linspace(u_range[0], u_range[1], 9)
    rows = max(1, math.ceil((v1 - v0) / side))
    vs = np.linspace(v0, v1, rows + 1)
    return [(us[i], us[i + 1], vs[k], vs[k + 1]) for i in range(8) for k in range(rows)]


def _branch_range(sheet: _Sheet, box, inner: bool, m: int) -> range:
    """Сдвиги j, при которых Re ζ' может попасть в полосу плакетки m"""
    values = np.real(sheet.zeta_prime(_contour(box, 64), 0, inner))
    values = values[np.isfinite(values)]
    if values.size == 0:
        return range(0)
    lo = math.ceil((2 * math.pi * m - values.max()) / (2 * math.pi)) - 1
    hi = math.floor((2 * math.pi * (m + 1) - values.min()) / (2 * math.pi)) + 1
    return range(lo, hi + 1)


def _search_rectangle(chart: SectorChart, n: int, window: SearchWindow) -> Optional[Tuple[Tuple[float, float], float, float]]:
    bounds = plaque_bounds(chart, n)
    if bounds["empty"]:
        return None
    v_lo = max(bounds["v"][0], -math.log(window.radius))
    v_hi = min(bounds["v"][1], -math.log(window.z_floor))
    if v_lo >= v_hi:
        return None
    return bounds["u"], v_lo, v_hi


def _admissible(chart: SectorChart, zeta: complex, zeta_p: complex, n: int, m: int, window: SearchWindow,
                v_range: Tuple[float, float]) -> bool:
    two_pi = 2 * math.pi
    if not two_pi * n <= zeta.real < two_pi * (n + 1):
        return False
    if not two_pi * m <= zeta_p.real < two_pi * (m + 1):
        return False
    if not v_range[0] - EDGE_TOL <= zeta.imag <= v_range[1] + EDGE_TOL:
        return False
    if chart.b * zeta.real + chart.a * zeta.imag < -math.log(window.radius) - EDGE_TOL:
        return False
    return bidisc_window(chart, zeta, closed=True) and bidisc_window(chart, zeta_p, closed=True)


def _check_not_identical(sheet: _Sheet, u_range, v_lo: float, v_hi: float, j_values, inner: bool):
    grid = (np.linspace(u_range[0], u_range[1], 7)[1:-1]
            + 1j * np.linspace(v_lo, v_hi, 7)[1:-1])
    for j in j_values:
        values = sheet.value(grid, j, inner)
        scale = np.abs(sheet.alpha * np.exp(1j * sheet.lam * (grid + sheet.c_a)))
        if np.all(np.abs(values) <= 1e-13 * scale):
            raise LabError("identical-plaques", "the plaque coincides with the perturbed plaque")


def find_intersections(chart: SectorChart, fam: PerturbationFamily, alpha: complex, n: int, beta: complex,
                       m: int, eps: float, window: Optional[SearchWindow] = None,
                       consts: Optional[RegionConstants] = None, publish: bool = True) -> IntersectionRecord:
    """
    Все точки L_{α,n} ∩ Φ_ε(L_{β,m}) в окне.

    Прямоугольник плакетки делится на коробки; число нулей в коробке дает
    принцип аргумента, коробки с одним нулем полируются Ньютоном, с кратным
    нулем меньше CLUSTER дают точку с кратностью, равной числу вращения.
    Коробки без ответа после max_depth делений учитываются как неразрешенные.

    publish=False: счетчики остаются в записи, метрики пишет вызывающий
    (в рабочем процессе реестр Prometheus теряется).

    Raises:
        LabError("identical-plaques"): плакетки совпадают (ε = 0, тот же лист)
    """
    if eps < 0:
        raise LabError("config", f"ε must be nonnegative, got {eps}")
    alpha, beta = complex(alpha), complex(beta)
    if eps == 0 and alpha == beta and n == m:
        raise LabError("identical-plaques", f"L_{{α,{n}}} with α = {alpha} is compared with itself")
    cfg = get_config().intersection
    window = SearchWindow() if window is None else window
    record = IntersectionRecord(chart=chart, alpha=alpha, n=n, beta=beta, m=m, eps=eps)
    rectangle = _search_rectangle(chart, n, window)
    if rectangle is None:
        return record
    u_range, v_lo, v_hi = rectangle
    sheet = _Sheet(chart, fam, alpha, beta, eps)
    poles = sheet.poles(n)
    consts = consts if consts is not None or eps == 0 else resolve_constants(chart, fam)

    roots: List[Tuple[complex, complex, int]] = []
    for h_lo, h_hi, inner in _halves(sheet, v_lo, v_hi):
        outline = (u_range[0], u_range[1], h_lo, h_hi)
        j_values = _branch_range(sheet, outline, inner, m)
        _check_not_identical(sheet, u_range, h_lo, h_hi, j_values, inner)
        for j in j_values:
            stack = [(box, 0) for box in _initial_boxes(u_range, h_lo, h_hi)]
            while stack:
                box, depth = stack.pop()
                record.boxes += 1
                size = max(box[1] - box[0], box[3] - box[2])
                can_split = depth < cfg.max_depth and size > cfg.min_box
                if any(_touches(box, p, cfg.pole_exclusion) for p in poles):
                    if can_split and size > cfg.pole_exclusion:
                        stack.extend((child, depth + 1) for child in _split(box))
                    else:
                        record.excluded += 1
                    continue
                count = _winding(sheet, box, j, inner, cfg.boundary_samples)
                if count == 0:
                    continue
                if count is not None and (count == 1 or size <= CLUSTER):
                    center = complex((box[0] + box[1]) / 2, (box[2] + box[3]) / 2)
                    root = _newton(sheet, center, j, inner, record.newton)
                    if root is not None and _inside(box, root, 1e-12 if count == 1 else size):
                        roots.append((root, sheet.zeta_prime(root, j, inner).item(), count))
                        continue
                if can_split:
                    stack.extend((child, depth + 1) for child in _split(box))
                else:
                    record.unresolved += 1

    for zeta, zeta_p, multiplicity in _dedupe(roots):
        if not _admissible(chart, zeta, zeta_p, n, m, window, (v_lo, v_hi)):
            continue
        point = _make_point(chart, fam, sheet, zeta, zeta_p, multiplicity, n, m, consts)
        if point is not None:
            record.points.append(point)

    if record.unresolved:
        logger.warning(f"{record.unresolved} неразрешенных коробок для (α={alpha:.6g}, n={n}, β={beta:.6g}, m={m})")
    logger.debug(f"Пересечения n={n}, m={m}, ε={eps:g}: {record.count} точек, {record.boxes} коробок")
    if publish:
        publish_tallies(record.newton, region_tally(record), record.unresolved)
    return record


def region_tally(record: IntersectionRecord) -> Counter:
    """Число точек по областям D1..D4"""
    return Counter(p.region.major for p in record.points if p.region is not None)


def publish_tallies(newton: Counter, regions: Counter, unresolved: int):
    """Переносит накопленные счетчики поиска в метрики"""
    for status, count in newton.items():
        record_newton(status, count)
    for region, count in regions.items():
        record_intersection(region, count)
    if unresolved:
        record_unresolved_box(unresolved)


def _dedupe(roots: List[Tuple[complex, complex, int]]) -> List[Tuple[complex, complex, int]]:
    unique: List[Tuple[complex, complex, int]] = []
    for root in roots:
        if all(abs(root[0] - other[0]) > 1e-10 * max(1.0, abs(root[0])) for other in unique):
            unique.append(root)
    return unique


def _make_point(chart: SectorChart, fam: PerturbationFamily, sheet: _Sheet, zeta: complex, zeta_p: complex,
                multiplicity: int, n: int, m: int, consts: Optional[RegionConstants]) -> Optional[IntersectionPoint]:
    t = zeta + sheet.c_a
    z = cmath.exp(1j * t)
    w = sheet.alpha * cmath.exp(1j * chart.lam * t)
    try:
        residual_a = abs(plaque_graph(chart, sheet.alpha, n, z) - w)
        residual_b = abs(perturbed_plaque_graph(chart, fam, sheet.beta, m, sheet.eps, z) - w)
    except LabError as e:
        logger.debug(f"Точка ζ = {zeta} на краю плакетки: {e.message}")
        return None
    scale = max(abs(w), sheet.eps * abs(fam.b1), 1e-12)
    if max(residual_a, residual_b) > RESIDUAL_TOL * scale:
        logger.warning(f"Точка ζ = {zeta} не прошла проверку уравнений плакеток: {residual_a:.3g}, {residual_b:.3g}")
        return None
    region = classify_region((z, w), sheet.eps, consts, fam, chart.lam) if sheet.eps > 0 else None
    if abs(zeta.real - 2 * math.pi * round(zeta.real / (2 * math.pi))) < 1e-9 \
            or abs(zeta_p.real - 2 * math.pi * round(zeta_p.real / (2 * math.pi))) < 1e-9:
        logger.info(f"Точка ζ = {zeta}, ζ' = {zeta_p} в пределах 1e-9 от границы плакетки")
    return IntersectionPoint(z=z, w=w, zeta=zeta, zeta_p=zeta_p, residuals=(residual_a, residual_b),
                             multiplicity=multiplicity, region=region)


def grid_count_oracle(chart: SectorChart, fam: PerturbationFamily, alpha: complex, n: int, beta: complex,
                      m: int, eps: float, window: Optional[SearchWindow] = None, resolution: int = 2000,
                      chunk: int = 250) -> int:
    """
    Переборный подсчет: числа вращения всех клеток равномерной сетки resolution × resolution,
    допустимость проверяется в центрах клеток. Клетки у полюса отбрасываются.
    """
    cfg = get_config().intersection
    window = SearchWindow() if window is None else window
    rectangle = _search_rectangle(chart, n, window)
    if rectangle is None:
        return 0
    u_range, v_lo, v_hi = rectangle
    sheet = _Sheet(chart, fam, complex(alpha), complex(beta), eps)
    poles = sheet.poles(n)
    total = 0
    for h_lo, h_hi, inner in _halves(sheet, v_lo, v_hi):
        u = np.linspace(u_range[0], u_range[1], resolution + 1)
        v = np.linspace(h_lo, h_hi, resolution + 1)
        cell = math.hypot(u[1] - u[0], v[1] - v[0])
        for j in _branch_range(sheet, (u_range[0], u_range[1], h_lo, h_hi), inner, m):
            for start in range(0, resolution, chunk):
                rows = v[start:min(start + chunk, resolution) + 1]
                values = sheet.value(u[None, :] + 1j * rows[:, None], j, inner)
                with np.errstate(invalid="ignore", divide="ignore"):
                    along = np.angle(values[:, 1:] / values[:, :-1])
                    across = np.angle(values[1:, :] / values[:-1, :])
                windings = np.rint((along[:-1, :] + across[:, 1:] - along[1:, :] - across[:, :-1]) / (2 * math.pi))
                windings = np.nan_to_num(windings).astype(int)
                for r, c in zip(*np.nonzero(windings)):
                    center = complex((u[c] + u[c + 1]) / 2, (rows[r] + rows[r + 1]) / 2)
                    if any(abs(center - p) <= max(cfg.pole_exclusion, cell) for p in poles):
                        continue
                    center_p = sheet.zeta_prime(center, j, inner).item()
                    if _admissible(chart, center, center_p, n, m, window, (v_lo, v_hi)):
                        total += int(windings[r, c])
    return total
