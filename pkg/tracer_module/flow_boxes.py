import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any, Sequence, Set, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from foliation_module import FoliationForm, singular_points_in_chart
from tracer_module.line_field import field_at
from tracer_module.leaf_tracer import LeafTrace

logger = get_logger()

OK = "ok"
BAD_AXIS = "bad-axis"

# Минимальная доля компоненты поля вдоль оси листа (трансверсальность оси)
TRANSVERSALITY = 0.2
# Ниже этой доли плакетка считается сложенной над осью
FOLD_RATIO = 0.05


@dataclass(frozen=True)
class FlowBox:
    """
    Бидиск |q_k − center_k| ≤ radius в карте.

    Листы в коробке: графики над осью leaf_axis; трансверсаль: другая координата
    через центр, ее квадрат [−r, r]² разбит на бины.
    """
    box_id: int
    chart: int
    center: np.ndarray
    radius: float
    leaf_axis: int

    @property
    def transversal_axis(self) -> int:
        return 1 - self.leaf_axis

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=complex))
        return np.max(np.abs(points - self.center), axis=1) <= self.radius

    def bin_of(self, alpha: complex, bins_per_side: int) -> int:
        offset = (complex(alpha) - self.center[self.transversal_axis]) / self.radius
        ix = int(np.clip(np.floor((offset.real + 1) / 2 * bins_per_side), 0, bins_per_side - 1))
        iy = int(np.clip(np.floor((offset.imag + 1) / 2 * bins_per_side), 0, bins_per_side - 1))
        return iy * bins_per_side + ix

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.box_id,
            "chart": self.chart,
            "center": [[c.real, c.imag] for c in self.center],
            "radius": self.radius,
            "leaf_axis": self.leaf_axis
        }


@dataclass
class FlowBoxGrid:
    foliation: FoliationForm
    boxes: List[FlowBox]
    r_sing: float
    singular_points: Dict[int, np.ndarray] = field(default_factory=dict)
    bins_per_side: int = 8
    bad_axis: Set[int] = field(default_factory=set)

    @property
    def n_bins(self) -> int:
        return self.bins_per_side ** 2

    @property
    def signature(self) -> Tuple:
        """Отпечаток сетки: токи сравнимы только на одинаковых сетках"""
        return (self.foliation.name, self.bins_per_side, len(self.boxes),
                tuple((b.chart, b.leaf_axis, round(b.radius, 12),
                       tuple(np.round(np.concatenate([b.center.real, b.center.imag]), 9))) for b in self.boxes))

    def boxes_in_chart(self, chart: int) -> List[FlowBox]:
        return [b for b in self.boxes if b.chart == chart]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "boxes": len(self.boxes),
            "bins_per_box": self.n_bins,
            "r_sing": self.r_sing,
            "bad_axis": sorted(self.bad_axis)
        }


@dataclass
class Plaque:
    box_id: int
    points: np.ndarray
    alpha: Optional[complex]
    bin: Optional[int]
    status: str = OK


def _axis_ratio(f: FoliationForm, chart: int, points: np.ndarray, leaf_axis: int) -> np.ndarray:
    x, y = f.vector_field(chart)
    pts = np.atleast_2d(points)
    values = np.stack([np.asarray(x(pts[:, 0], pts[:, 1]), dtype=complex) * np.ones(len(pts)),
                       np.asarray(y(pts[:, 0], pts[:, 1]), dtype=complex) * np.ones(len(pts))], axis=1)
    norms = np.linalg.norm(values, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(norms > 0, np.abs(values[:, leaf_axis]) / norms, 0.0)


def _box_samples(center: np.ndarray, radius: float, per_axis: int) -> np.ndarray:
    """Точки проверки трансверсальности: решетка по четырем вещественным координатам бидиска"""
    offsets = np.linspace(-radius, radius, per_axis) / np.sqrt(2)
    samples = [center + np.array([a + 1j * b, c + 1j * d])
               for a, b, c, d in itertools.product(offsets, repeat=4)]
    return np.array(samples)


def build_grid(f: FoliationForm, chart: int, centers: Sequence[Sequence[complex]], radius: float,
               r_sing: Optional[float] = None, bins_per_side: Optional[int] = None,
               samples_per_axis: int = 3) -> FlowBoxGrid:
    """
    Сетка коробок потока в карте.

    Коробки ближе r_sing к особой точке и коробки, где ни одна координатная ось
    не трансверсальна слоению, отбрасываются.
    """
    cfg = get_config()
    r_sing = cfg.tracer.r_sing if r_sing is None else r_sing
    bins_per_side = cfg.current.bins_per_side if bins_per_side is None else bins_per_side
    singular = np.array(singular_points_in_chart(f, chart), dtype=complex).reshape(-1, 2)
    boxes: List[FlowBox] = []
    skipped_singular = skipped_axis = 0

    for center in centers:
        center = np.asarray(center, dtype=complex)
        if len(singular):
            gap = np.min(np.linalg.norm(singular - center, axis=1)) - radius * np.sqrt(2)
            if gap < r_sing:
                skipped_singular += 1
                continue
        v = field_at(f, chart, center)
        leaf_axis = int(np.argmax(np.abs(v)))
        if np.min(_axis_ratio(f, chart, _box_samples(center, radius, samples_per_axis), leaf_axis)) < TRANSVERSALITY:
            skipped_axis += 1
            continue
        boxes.append(FlowBox(box_id=len(boxes), chart=chart, center=center, radius=radius, leaf_axis=leaf_axis))

    logger.info(f"Сетка коробок в карте {chart}: {len(boxes)} коробок, отброшено {skipped_singular} "
                f"у особых точек и {skipped_axis} без трансверсальной оси")
    return FlowBoxGrid(foliation=f, boxes=boxes, r_sing=r_sing, singular_points={chart: singular},
                       bins_per_side=bins_per_side)


def lattice_grid(f: FoliationForm, chart: int = 0, spacing: float = 0.5, extent: float = 1.0,
                 radius: Optional[float] = None, **kwargs) -> FlowBoxGrid:
    """Коробки с центрами в решетке шага spacing по Re и Im обеих координат, |Re|, |Im| ≤ extent"""
    radius = spacing / 2 if radius is None else radius
    ticks = np.arange(-extent, extent + 1e-12, spacing)
    centers = [(a + 1j * b, c + 1j * d) for a, b, c, d in itertools.product(ticks, repeat=4)]
    return build_grid(f, chart, centers, radius, **kwargs)


def axis_projection(f: FoliationForm, box: FlowBox, points: np.ndarray) -> np.ndarray:
    """Перенос точек вдоль листа на трансверсаль в первом порядке (векторизованно)"""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    x, y = f.vector_field(box.chart)
    values = [np.asarray(x(points[:, 0], points[:, 1])) * np.ones(len(points)),
              np.asarray(y(points[:, 0], points[:, 1])) * np.ones(len(points))]
    leaf, trans = box.leaf_axis, box.transversal_axis
    slope = values[trans] / values[leaf]
    return points[:, trans] - (points[:, leaf] - box.center[leaf]) * slope


def transversal_crossing(f: FoliationForm, box: FlowBox, q: Sequence[complex], rtol: float = 1e-10) -> complex:
    """
    Точка пересечения плакетки через q с трансверсалью коробки.

    Лист как график t = g(l) над осью: dg/dl = X_t/X_l интегрируется по отрезку
    от l(q) до l(center).

    Raises:
        LabError("bad-axis"): компонента поля вдоль оси обращается в нуль
    """
    q = np.asarray(q, dtype=complex)
    leaf, trans = box.leaf_axis, box.transversal_axis
    l0, l1 = q[leaf], box.center[leaf]
    if l0 == l1:
        return complex(q[trans])
    x, y = f.vector_field(box.chart)

    def rhs(s, t):
        point = np.empty(2, dtype=complex)
        point[leaf] = l0 + s * (l1 - l0)
        point[trans] = t[0]
        v = (x(point), y(point))
        if abs(v[leaf]) < 1e-12:
            raise LabError("bad-axis", f"box {box.box_id}: leaf tangent to the transversal at {point}")
        return [(l1 - l0) * v[trans] / v[leaf]]

    sol = solve_ivp(rhs, (0.0, 1.0), [complex(q[trans])], method="DOP853", rtol=rtol, atol=rtol * box.radius)
    if sol.status != 0:
        raise LabError("bad-axis", f"box {box.box_id}: crossing integration failed: {sol.message}")
    return complex(sol.y[0, -1])


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Полуоткрытые отрезки [start, end) подряд идущих True"""
    padded = np.concatenate([[0], mask.astype(int), [0]])
    changes = np.diff(padded)
    return list(zip(np.nonzero(changes == 1)[0], np.nonzero(changes == -1)[0]))


def extract_plaques(trace: LeafTrace, grid: FlowBoxGrid) -> List[Plaque]:
    """
    Максимальные связные куски траектории в каждой коробке.

    Каждая плакетка записывается с параметром пересечения α трансверсали и бином;
    если плакетка складывается над осью листа, коробка помечается "bad-axis".
    """
    f = grid.foliation
    plaques: List[Plaque] = []
    for seg in trace.segments:
        for box in grid.boxes_in_chart(seg.chart):
            for start, end in _runs(box.contains(seg.points)):
                pts = seg.points[start:end]
                if np.min(_axis_ratio(f, box.chart, pts, box.leaf_axis)) < FOLD_RATIO:
                    if box.box_id not in grid.bad_axis:
                        logger.warning(f"Коробка {box.box_id}: плакетка не является графиком над осью")
                    grid.bad_axis.add(box.box_id)
                    plaques.append(Plaque(box_id=box.box_id, points=pts, alpha=None, bin=None, status=BAD_AXIS))
                    continue
                alpha = transversal_crossing(f, box, pts[0])
                plaques.append(Plaque(box_id=box.box_id, points=pts, alpha=alpha,
                                      bin=box.bin_of(alpha, grid.bins_per_side)))
    return plaques
