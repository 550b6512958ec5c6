import math
from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any, Tuple

import numpy as np
from scipy import stats

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from foliation_module import FoliationForm, best_chart, chart_to_homogeneous, chart_transition
from leafgeom_module import SectorChart
from monitoring import record_walk_paths
from singularity_module import analyze_singularity, HYPERBOLIC
from tracer_module import LeafTrace, TraceSegment, SingularCache, field_at, line_field_at
from utils.worker_pool import map_tasks, spawn_seeds, make_rng

logger = get_logger()

# Предел |μ·τ| для одного точного куска модельного шага
MODEL_PIECE = 0.5
MAX_MODEL_PIECES = 500
# Ближе этого к особой точке (в модельных координатах) путь считается поглощенным
ABSORBED = 1e-12


@dataclass(frozen=True)
class WalkEnsemble:
    """Ансамбль листовых блужданий из одной стартовой точки"""
    start: Tuple[complex, complex]
    chart: int = 0
    count: int = 1
    h_walk: Optional[float] = None
    steps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise LabError("config", f"ensemble needs at least one path, got {self.count}")
        if self.h_walk is not None and not self.h_walk > 0:
            raise LabError("config", f"h_walk must be positive, got {self.h_walk}")
        if self.steps < 1:
            raise LabError("config", f"walk needs at least one step, got {self.steps}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start": [[c.real, c.imag] for c in map(complex, self.start)],
            "chart": self.chart,
            "count": self.count,
            "h_walk": self.h_walk,
            "steps": self.steps,
            "seed": self.seed
        }


@dataclass
class WalkResult:
    ensemble: WalkEnsemble
    paths: List[LeafTrace] = field(default_factory=list)
    discarded: int = 0

    @property
    def endpoints(self) -> List[Tuple[int, np.ndarray]]:
        return [(p.end_chart, p.endpoint) for p in self.paths]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ensemble": self.ensemble.to_dict(),
            "paths": len(self.paths),
            "discarded": self.discarded
        }


def _rk4(f: FoliationForm, chart: int, q: np.ndarray, tau: complex, substeps: int) -> np.ndarray:
    """RK4 для dq/dτ = X(q) на отрезке [0, τ] комплексного времени"""
    dt = tau / substeps
    for _ in range(substeps):
        k1 = field_at(f, chart, q)
        k2 = field_at(f, chart, q + dt / 2 * k1)
        k3 = field_at(f, chart, q + dt / 2 * k2)
        k4 = field_at(f, chart, q + dt * k3)
        q = q + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return q


def leaf_step(f: FoliationForm, chart: int, q: np.ndarray, displacement: complex,
              substeps: Optional[int] = None, leaf_tol: Optional[float] = None,
              max_refine: Optional[int] = None) -> np.ndarray:
    """
    Смещение вдоль листа на displacement по единичному касательному вектору X/|X|.

    Делается потоком поля X в комплексное время τ = displacement/|X(q)|, поэтому точка
    остается на листе; точность проверяется сравнением с вдвое более мелким шагом.

    Raises:
        LabError("projection-failure"): проверка не прошла после max_refine удвоений
    """
    cfg = get_config().current
    substeps = cfg.substeps if substeps is None else substeps
    leaf_tol = cfg.leaf_tol if leaf_tol is None else leaf_tol
    max_refine = cfg.max_refine if max_refine is None else max_refine

    q = np.asarray(q, dtype=complex)
    speed = np.linalg.norm(field_at(f, chart, q))
    if speed == 0:
        raise LabError("at-singularity", f"no leaf direction at {q}")
    tau = displacement / speed
    coarse = _rk4(f, chart, q, tau, substeps)
    for _ in range(max_refine):
        substeps *= 2
        fine = _rk4(f, chart, q, tau, substeps)
        if np.max(np.abs(fine - coarse)) <= leaf_tol * max(1.0, np.max(np.abs(fine))):
            return fine
        coarse = fine
    raise LabError("projection-failure", f"leaf step from {q} did not converge ({substeps} substeps)")


def model_step(jet, q: np.ndarray, displacement: complex) -> np.ndarray:
    """
    Шаг в линеаризующих координатах особой точки: точные потоки x_k ↦ x_k·e^{μ_k τ}
    кусками, каждый с |μ·τ| ≤ MODEL_PIECE и длиной по модельной скорости |Λx|.

    Raises:
        LabError("projection-failure"): путь поглощен особой точкой
    """
    mu = np.array(jet.eigenvalues)
    x = jet.to_model(q)
    direction = displacement / abs(displacement) if displacement else 1.0
    remaining = abs(displacement)
    for _ in range(MAX_MODEL_PIECES):
        speed = np.linalg.norm(mu * x)
        if speed < ABSORBED:
            raise LabError("projection-failure", f"walk absorbed by the singular point at {jet.center}")
        piece = min(remaining, MODEL_PIECE * speed / np.max(np.abs(mu)))
        x = x * np.exp(mu * direction * piece / speed)
        remaining -= piece
        if remaining <= 0:
            return jet.to_chart(x)
    raise LabError("projection-failure", f"model step near {jet.center} did not finish")


def _walk_path(f: FoliationForm, chart: int, start: np.ndarray, h_walk: float, steps: int,
               seed_seq: np.random.SeedSequence, singular_by_chart: Dict[int, np.ndarray]) -> LeafTrace:
    cfg = get_config()
    rng = make_rng(seed_seq)
    scale = math.sqrt(h_walk)
    jets: Dict[Tuple[int, int], Any] = {}
    q = np.asarray(start, dtype=complex)
    segments: List[TraceSegment] = []
    points, stamps = [q], [0.0]

    for k in range(1, steps + 1):
        xi = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2)
        singular = singular_by_chart.get(chart, np.zeros((0, 2)))
        near = None
        if len(singular):
            distances = np.linalg.norm(singular - q, axis=1)
            if np.min(distances) < cfg.tracer.r_stop:
                near = int(np.argmin(distances))
        if near is None:
            q = leaf_step(f, chart, q, scale * xi)
        else:
            key = (chart, near)
            if key not in jets:
                s = analyze_singularity(f, singular[near], chart=chart)
                jets[key] = s.jet if s.classification == HYPERBOLIC else None
            if jets[key] is None:
                raise LabError("projection-failure", f"walk entered a non-hyperbolic singular point {singular[near]}")
            q = model_step(jets[key], q, scale * xi)

        if np.max(np.abs(q)) > cfg.tracer.chart_switch:
            new_chart = best_chart(chart_to_homogeneous(chart, q))
            if new_chart != chart:
                segments.append(TraceSegment(chart=chart, points=np.array(points), s=np.array(stamps)))
                q = chart_transition(chart, new_chart, q)
                chart, points, stamps = new_chart, [], []
        points.append(q)
        stamps.append(k * h_walk)

    segments.append(TraceSegment(chart=chart, points=np.array(points), s=np.array(stamps)))
    return LeafTrace(start=np.asarray(start, dtype=complex), start_chart=segments[0].chart, segments=segments)


def leafwise_walk(f: FoliationForm, ensemble: WalkEnsemble, jobs: Optional[int] = None) -> WalkResult:
    """
    Листовое броуновское блуждание: шаг √h·ξ вдоль единичного касательного вектора,
    ξ: стандартная комплексная гауссовская величина (E|ξ|² = 1).

    В шаре r_stop гиперболической особой точки шаг делается в линеаризующих
    координатах. Пути с неудачной проекцией отбрасываются и учитываются.
    Отметки s у точек пути: время блуждания k·h.

    Raises:
        LabError("at-singularity"): старт в особой точке
    """
    cfg = get_config()
    h_walk = cfg.current.h_walk if ensemble.h_walk is None else ensemble.h_walk
    start = np.asarray(ensemble.start, dtype=complex)
    line_field_at(f, ensemble.chart, start)

    cache = SingularCache(f)
    singular_by_chart = {chart: cache.in_chart(chart) for chart in (0, 1, 2)}
    seeds = spawn_seeds(ensemble.seed, ensemble.count)
    tasks = [(f, ensemble.chart, start, h_walk, ensemble.steps, seed, singular_by_chart) for seed in seeds]
    traces = map_tasks(_walk_path, tasks, jobs)

    result = WalkResult(ensemble=ensemble)
    for trace in traces:
        if trace is None:
            result.discarded += 1
        else:
            result.paths.append(trace)
    record_walk_paths("ok", len(result.paths))
    if result.discarded:
        record_walk_paths("discarded", result.discarded)
        logger.warning(f"Отброшено {result.discarded} из {ensemble.count} путей блуждания")
    logger.info(f"Блуждание: {len(result.paths)} путей по {ensemble.steps} шагов, h = {h_walk:g}")
    return result


def model_exit_walk(chart: SectorChart, start: complex, count: int, h_walk: float, seed: int = 0,
                    max_steps: int = 200000) -> np.ndarray:
    """
    Броуновское движение в секторе модельного листа до выхода через сторону.

    Возвращает точки выхода на краю полуплоскости: W = ρ^γ на стороне arg ζ = 0
    и W = −ρ^γ на стороне arg ζ = theta_max. Не вышедшие за max_steps пути отбрасываются.
    """
    rng = make_rng(seed)
    rotate = np.exp(-1j * chart.theta_max)
    zeta = np.full(count, complex(start))
    exits = np.full(count, np.nan)
    active = np.arange(count)
    scale = math.sqrt(h_walk / 2)

    for _ in range(max_steps):
        if active.size == 0:
            break
        prev = zeta[active]
        new = prev + scale * (rng.standard_normal(active.size) + 1j * rng.standard_normal(active.size))
        below = new.imag <= 0
        beyond = (new * rotate).imag >= 0
        left = below | beyond
        if np.any(left):
            idx = np.nonzero(left)[0]
            p, n = prev[idx], new[idx]
            pr, nr = p * rotate, n * rotate
            with np.errstate(divide="ignore", invalid="ignore"):
                t_low = np.where(below[idx], p.imag / (p.imag - n.imag), np.inf)
                t_high = np.where(beyond[idx], pr.imag / (pr.imag - nr.imag), np.inf)
            low_first = t_low <= t_high
            t = np.where(low_first, t_low, t_high)
            radius = np.abs(p + t * (n - p)) ** chart.gamma
            exits[active[idx]] = np.where(low_first, radius, -radius)
        zeta[active] = new
        active = active[~left]

    if active.size:
        logger.warning(f"{active.size} модельных путей не вышли из сектора за {max_steps} шагов")
    return exits[np.isfinite(exits)]


def exit_distribution_test(chart: SectorChart, start: complex, count: int = 10000, h_walk: float = 1e-3,
                           seed: int = 0) -> Tuple[float, float]:
    """
    Сравнение точек выхода с гармонической мерой: из W0 = U0 + iV0 край полуплоскости
    виден с плотностью Коши(U0, V0).

    Returns:
        (статистика Колмогорова–Смирнова, p-value)
    """
    w0 = complex(start) ** chart.gamma
    exits = model_exit_walk(chart, start, count, h_walk, seed)
    result = stats.kstest(exits, stats.cauchy(loc=w0.real, scale=w0.imag).cdf)
    logger.info(f"Выход из сектора: {exits.size} путей, KS = {result.statistic:.4f}")
    return float(result.statistic), float(result.pvalue)
