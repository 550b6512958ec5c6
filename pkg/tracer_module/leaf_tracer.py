from dataclasses import dataclass, field, replace
from typing import List, Optional, Dict, Any, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from foliation_module import (
    FoliationForm, best_chart, chart_to_homogeneous, chart_transition, homogeneous_to_chart,
    projective_singular_points
)
from leafgeom_module import sector_of, leaf_coordinates, psi_array
from singularity_module import analyze_singularity, LinearizingJet, HYPERBOLIC
from tracer_module.line_field import field_at, line_field_at, refit_phase

logger = get_logger()

HORIZON = "horizon"
NEAR_SINGULARITY = "near-singularity"
LEFT_ALL_CHARTS = "left-all-charts-error"

# Предел числа переходов между картами за одну траекторию
MAX_CHART_SWITCHES = 1000
# Продолжение по модельному листу: шаг по ζ, предел шагов, нижний радиус
MODEL_STEP = 0.1
MAX_MODEL_STEPS = 20000
MODEL_FLOOR = 1e-12


@dataclass
class TraceSegment:
    """Кусок траектории в одной карте: точки (N×2) и отметки длины дуги"""
    chart: int
    points: np.ndarray
    s: np.ndarray
    # точки получены из модельного листа через джет, а не интегрированием
    model: bool = False


@dataclass(frozen=True)
class ModelHandoff:
    """Точка передачи траектории в линеаризующие координаты особой точки"""
    singular_point: np.ndarray
    chart: int
    lam: complex
    model_point: np.ndarray
    alpha: complex
    zeta: complex
    mirrored: bool
    jet: Optional[LinearizingJet] = field(default=None, repr=False, compare=False)
    model_arc: float = 0.0

    def model_to_chart(self, x: Sequence[complex]) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return self.jet.to_chart(np.conj(x) if self.mirrored else x)

    def chart_to_model(self, q: Sequence[complex]) -> np.ndarray:
        x = self.jet.to_model(q)
        return np.conj(x) if self.mirrored else x

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chart": self.chart,
            "lambda": [self.lam.real, self.lam.imag],
            "alpha": [self.alpha.real, self.alpha.imag],
            "zeta": [self.zeta.real, self.zeta.imag],
            "mirrored": self.mirrored,
            "model_arc": self.model_arc
        }


@dataclass
class LeafTrace:
    start: np.ndarray
    start_chart: int
    segments: List[TraceSegment] = field(default_factory=list)
    reason: str = HORIZON
    singular_point: Optional[np.ndarray] = None
    distance: Optional[float] = None
    final_phase: complex = 1 + 0j
    handoff: Optional[ModelHandoff] = None

    @classmethod
    def from_polyline(cls, chart: int, points: Sequence[Sequence[complex]], s: Optional[Sequence[float]] = None):
        """Траектория из готовой полилинии одной карты (модельные листы, пути блуждания)"""
        points = np.asarray(points, dtype=complex)
        if s is None:
            steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
            s = np.concatenate([[0.0], np.cumsum(steps)])
        return cls(start=points[0], start_chart=chart,
                   segments=[TraceSegment(chart=chart, points=points, s=np.asarray(s, dtype=float))])

    @property
    def end_chart(self) -> int:
        return self.segments[-1].chart

    @property
    def endpoint(self) -> np.ndarray:
        return self.segments[-1].points[-1]

    @property
    def arc_length(self) -> float:
        return float(self.segments[-1].s[-1])

    def rows(self) -> np.ndarray:
        """Строки chart, re_z, im_z, re_w, im_w, s"""
        blocks = []
        for seg in self.segments:
            p = seg.points
            blocks.append(np.column_stack([np.full(len(p), seg.chart), p[:, 0].real, p[:, 0].imag,
                                           p[:, 1].real, p[:, 1].imag, seg.s]))
        return np.vstack(blocks)

    def save_csv(self, path: str):
        np.savetxt(path, self.rows(), delimiter=",", header="chart,re_z,im_z,re_w,im_w,s", comments="",
                   fmt=["%d"] + ["%.17g"] * 5)

    def prefix(self, s_max: float) -> "LeafTrace":
        """Начальный кусок траектории с отметками s ≤ s_max"""
        segments = []
        for seg in self.segments:
            keep = seg.s <= s_max
            if not np.any(keep):
                break
            segments.append(TraceSegment(chart=seg.chart, points=seg.points[keep], s=seg.s[keep], model=seg.model))
            if not np.all(keep):
                break
        if not segments:
            raise LabError("empty", f"no trace points with s ≤ {s_max}")
        return LeafTrace(start=self.start, start_chart=self.start_chart, segments=segments, reason=HORIZON)

    def transition_gaps(self) -> List[float]:
        """Рассогласование концов соседних кусков после смены карты"""
        gaps = []
        for prev, nxt in zip(self.segments[:-1], self.segments[1:]):
            mapped = chart_transition(prev.chart, nxt.chart, prev.points[-1])
            gaps.append(float(np.max(np.abs(mapped - nxt.points[0]))))
        return gaps

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start_chart": self.start_chart,
            "segments": [{"chart": seg.chart, "points": len(seg.points), "model": seg.model} for seg in self.segments],
            "reason": self.reason,
            "arc_length": self.arc_length,
            "distance": self.distance,
            "handoff": self.handoff.to_dict() if self.handoff else None
        }


def _pack(q: np.ndarray) -> np.ndarray:
    return np.array([q[0].real, q[0].imag, q[1].real, q[1].imag])


def _unpack(y: np.ndarray) -> np.ndarray:
    return np.array([y[0] + 1j * y[1], y[2] + 1j * y[3]])


class SingularCache:
    """Особые точки слоения по картам (считаются один раз на траекторию или ансамбль)"""

    def __init__(self, f: FoliationForm):
        self.homogeneous = projective_singular_points(f)
        self.by_chart: Dict[int, np.ndarray] = {}

    def in_chart(self, chart: int) -> np.ndarray:
        if chart not in self.by_chart:
            points = []
            for x in self.homogeneous:
                try:
                    points.append(homogeneous_to_chart(chart, x))
                except LabError:
                    continue
            self.by_chart[chart] = np.array(points, dtype=complex).reshape(-1, 2)
        return self.by_chart[chart]


def model_handoff(f: FoliationForm, chart: int, singular_point: np.ndarray,
                  q: np.ndarray) -> Optional[ModelHandoff]:
    """
    Координаты (α, ζ) модельного листа через джет особой точки.

    None, если точка не гиперболическая или лежит на сепаратрисе.
    """
    try:
        s = analyze_singularity(f, singular_point, chart=chart)
        if s.classification != HYPERBOLIC or s.jet is None:
            return None
        x = s.jet.to_model(q)
        sector = sector_of(s.jet.lam, allow_mirror=True)
        if sector.mirrored:
            x = np.conj(x)
        alpha, zeta = leaf_coordinates(sector, x[0], x[1])
    except LabError as e:
        logger.warning(f"Передача в модельные координаты у {singular_point} невозможна: {e.message}")
        return None
    return ModelHandoff(singular_point=np.asarray(singular_point), chart=chart, lam=sector.lam,
                        model_point=x, alpha=alpha, zeta=zeta, mirrored=sector.mirrored, jet=s.jet)


def continue_in_model(handoff: ModelHandoff, last: TraceSegment, arc_horizon: float,
                      r_model: float) -> Optional[TraceSegment]:
    """
    Продолжение траектории по точному модельному листу после передачи.

    Путь: луч по ζ в направлении последнего шага интегратора (dζ = −i·d log z);
    точки переводятся в карту джетом. Остановка по длине дуги arc_horizon,
    выходу из бидиска радиуса r_model или max|x| < MODEL_FLOOR.
    """
    if handoff.jet is None or len(last.points) < 2:
        return None
    x_prev = handoff.chart_to_model(last.points[-2])
    if x_prev[0] == 0:
        return None
    dzeta = -1j * np.log(handoff.model_point[0] / x_prev[0])
    if not np.isfinite(dzeta) or dzeta == 0:
        return None
    zetas = handoff.zeta + MODEL_STEP * (dzeta / abs(dzeta)) * np.arange(1, MAX_MODEL_STEPS + 1)
    z, w = psi_array(sector_of(handoff.lam), handoff.alpha, zetas)
    size = np.maximum(np.abs(z), np.abs(w))
    inside = (size <= r_model) & (size >= MODEL_FLOOR)
    stop = int(np.argmin(inside)) if not np.all(inside) else len(inside)

    points, s = [last.points[-1]], [float(last.s[-1])]
    for k in range(stop):
        q = handoff.model_to_chart((z[k], w[k]))
        step = float(np.linalg.norm(q - points[-1]))
        if s[-1] + step > arc_horizon:
            break
        points.append(q)
        s.append(s[-1] + step)
    if len(points) < 2:
        return None
    logger.debug(f"Продолжение по модельному листу: {len(points) - 1} точек, дуга {s[-1] - s[0]:.3g}")
    return TraceSegment(chart=handoff.chart, points=np.array(points), s=np.array(s), model=True)


def trace_leaf(f: FoliationForm, start: Sequence[complex], arc_horizon: float, chart: int = 0,
               phase: complex = 1.0, rtol: Optional[float] = None, atol: Optional[float] = None,
               r_stop: Optional[float] = None, max_step: Optional[float] = None,
               handoff: bool = True, singulars: Optional[SingularCache] = None) -> LeafTrace:
    """
    Интегрирует лист вдоль единичного линейного поля phase·X/|X| по длине дуги.

    DOP853 с контролем ошибки; при |z| или |w| > chart_switch траектория переходит
    в карту, где точка ближе всего к началу координат, а фаза переносится якобианом
    смены карт. В шаре радиуса r_stop особой точки интегрирование останавливается;
    у гиперболической точки (handoff) траектория продолжается по модельному листу
    через джет до arc_horizon или выхода из бидиска радиуса r_sing.

    Raises:
        LabError("at-singularity"): старт в особой точке
        LabError("stiff-failure"): шаг интегратора стал слишком мал
    """
    cfg = get_config().tracer
    rtol = cfg.rtol if rtol is None else rtol
    atol = cfg.atol if atol is None else atol
    r_stop = cfg.r_stop if r_stop is None else r_stop
    max_step = cfg.max_step if max_step is None else max_step

    q = np.asarray(start, dtype=complex)
    line_field_at(f, chart, q)
    phase = complex(phase) / abs(phase)
    singulars = SingularCache(f) if singulars is None else singulars
    trace = LeafTrace(start=q.copy(), start_chart=chart)
    s0, switches = 0.0, 0
    if np.max(np.abs(q)) > cfg.chart_switch:
        better = best_chart(chart_to_homogeneous(chart, q))
        q, phase = refit_phase(f, chart, better, q, phase)
        chart = better

    while True:
        points = singulars.in_chart(chart)
        direction = phase

        def rhs(s, y, chart=chart, direction=direction):
            v = field_at(f, chart, _unpack(y))
            norm = np.linalg.norm(v)
            return _pack(direction * v / norm) if norm > 0 else np.zeros(4)

        def leave_chart(s, y):
            return cfg.chart_switch - np.max(np.abs(_unpack(y)))
        leave_chart.terminal = True
        leave_chart.direction = -1

        def near_singular(s, y, points=points):
            if len(points) == 0:
                return 1.0
            return np.min(np.linalg.norm(points - _unpack(y), axis=1)) - r_stop
        near_singular.terminal = True
        near_singular.direction = -1

        sol = solve_ivp(rhs, (s0, arc_horizon), _pack(q), method="DOP853", rtol=rtol, atol=atol,
                        max_step=max_step, events=[leave_chart, near_singular])
        if sol.status == -1:
            raise LabError("stiff-failure", f"chart {chart}, s = {sol.t[-1]:.6g}: {sol.message}")
        trace.segments.append(TraceSegment(chart=chart, points=np.array([_unpack(y) for y in sol.y.T]), s=sol.t))
        trace.final_phase = phase

        if sol.status == 0:
            trace.reason = HORIZON
            break
        if sol.t_events[1].size:
            end = _unpack(sol.y_events[1][0])
            nearest = points[np.argmin(np.linalg.norm(points - end, axis=1))]
            trace.reason = NEAR_SINGULARITY
            trace.singular_point = nearest
            trace.distance = float(np.linalg.norm(end - nearest))
            if handoff:
                trace.handoff = model_handoff(f, chart, nearest, end)
            if trace.handoff is not None and sol.t[-1] < arc_horizon:
                segment = continue_in_model(trace.handoff, trace.segments[-1], arc_horizon, cfg.r_sing)
                if segment is not None:
                    trace.segments.append(segment)
                    trace.handoff = replace(trace.handoff, model_arc=float(segment.s[-1] - segment.s[0]))
            logger.debug(f"Траектория остановлена у особой точки {nearest} (карта {chart})")
            break

        end = _unpack(sol.y_events[0][0])
        new_chart = best_chart(chart_to_homogeneous(chart, end))
        switches += 1
        if new_chart == chart or switches > MAX_CHART_SWITCHES:
            trace.reason = LEFT_ALL_CHARTS
            logger.warning(f"Траектория не смогла сменить карту {chart} в точке {end}")
            break
        q, phase = refit_phase(f, chart, new_chart, end, phase)
        logger.debug(f"Смена карты {chart} -> {new_chart} при s = {sol.t_events[0][0]:.6g}")
        chart, s0 = new_chart, float(sol.t_events[0][0])

    return trace
