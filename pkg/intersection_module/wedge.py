import cmath
import math
from collections import Counter
from dataclasses import dataclass
from typing import List, Sequence, Optional, Dict, Any, Tuple

import numpy as np

from core.errors import LabError
from core.logging import get_logger
from harmonic_module import BoundaryFunction, cauchy_mixture, poisson_extend
from leafgeom_module import SectorChart, to_halfplane, lowest_plaque
from utils.worker_pool import map_tasks, spawn_seeds, make_rng
from intersection_module.perturbation import PerturbationFamily
from intersection_module.regions import resolve_constants
from intersection_module.finder import SearchWindow, find_intersections, region_tally, publish_tallies

logger = get_logger()


@dataclass
class WedgeRow:
    eps: float
    delta: float
    J: float
    stderr: float
    unresolved_frac: float
    pairs: int

    def to_dict(self) -> Dict[str, Any]:
        return {"eps": self.eps, "delta": self.delta, "J": self.J, "stderr": self.stderr,
                "unresolved_frac": self.unresolved_frac, "pairs": self.pairs}


def kernel_boundary(chart: SectorChart, alpha: complex, spread: float = 0.0) -> BoundaryFunction:
    """Граничные данные листа L_α: ядро Коши с центром spread·cos(arg α)"""
    return cauchy_mixture([1.0], [spread * math.cos(cmath.phase(alpha))], [1.0])


def harmonic_value(H: BoundaryFunction, chart: SectorChart, zeta: complex) -> float:
    U, V = to_halfplane(chart, zeta)
    if H.exact is not None:
        return float(H.exact(U, V))
    return poisson_extend(H, (U, V))


def sample_annulus(chart: SectorChart, rng: np.random.Generator, count: int) -> np.ndarray:
    """α по мере, равномерной по (log|α|, arg α) на фундаментальном кольце"""
    log_modulus = rng.uniform(-2 * math.pi * chart.b, 0.0, count)
    angle = rng.uniform(-math.pi, math.pi, count)
    return np.exp(log_modulus + 1j * angle)


def active_plaques(chart: SectorChart, eps: float, extra: int = 2) -> int:
    """Последний номер плакетки, дающий точки при данном ε"""
    return max(0, math.ceil(abs(1 - chart.a) * math.log(1 / eps) / (2 * math.pi * chart.b))) + extra


def plaque_range(chart: SectorChart, window: SearchWindow, n_max: int) -> range:
    """
    Номера плакеток, перебираемые в окне: от нижней, задевающей |z| ≥ z_floor, до n_max.

    При a > 0 окно бидиска уходит в u < 0, и плакетки с n < 0 не пусты.
    """
    return range(lowest_plaque(chart, -math.log(window.z_floor)), n_max + 1)


def _pair_sum(chart: SectorChart, fam: PerturbationFamily, eps: float, alpha: complex, beta: complex,
              deltas: Tuple[float, ...], n_max: int, spread: float) -> Tuple[np.ndarray, int, int, Counter, Counter]:
    consts = resolve_constants(chart, fam)
    window = SearchWindow(radius=max(deltas), z_floor=consts.c * eps * 1e-3)
    H_alpha, H_beta = kernel_boundary(chart, alpha, spread), kernel_boundary(chart, beta, spread)
    sums = np.zeros(len(deltas))
    unresolved = boxes = 0
    newton, regions = Counter(), Counter()
    plaques = plaque_range(chart, window, n_max)
    for n in plaques:
        for m in plaques:
            record = find_intersections(chart, fam, alpha, n, beta, m, eps, window=window, consts=consts,
                                        publish=False)
            unresolved += record.unresolved
            boxes += record.boxes
            newton.update(record.newton)
            regions.update(region_tally(record))
            for point in record.points:
                try:
                    weight = harmonic_value(H_alpha, chart, point.zeta) * harmonic_value(H_beta, chart, point.zeta_p)
                except LabError as e:
                    logger.debug(f"Точка {point.zeta} на стороне сектора: {e.message}")
                    continue
                size = max(abs(point.z), abs(point.w))
                sums += np.array([weight * point.multiplicity if size <= d else 0.0 for d in deltas])
    return sums, unresolved, boxes, newton, regions


def wedge_sum_experiment(chart: SectorChart, fam: PerturbationFamily, eps_list: Sequence[float],
                         deltas: Sequence[float] = (0.3,), pairs: int = 2000, seed: int = 0,
                         spread: float = 0.0, n_max: Optional[int] = None,
                         jobs: Optional[int] = None) -> List[WedgeRow]:
    """
    Оценка Монте-Карло J_ε(δ) = E_{α,β} Σ_{n,m} Σ_p h_α(p)·h_β(p') по точкам пересечения
    плакеток с возмущенными плакетками внутри Δ²(0, δ).

    α и β независимы и распределены по инвариантной мере кольца; номера плакеток
    перебираются от нижней плакетки окна (отрицательной при a > 0) до active_plaques.
    Для всех δ используется один набор точек, поэтому J монотонна по δ.
    Счетчики поиска возвращаются из задач и пишутся в метрики здесь, в родительском процессе.
    """
    fam.check_lambda(chart.lam)
    deltas = tuple(sorted(float(d) for d in deltas))
    rows: List[WedgeRow] = []
    for eps, eps_seed in zip(eps_list, spawn_seeds(seed, len(eps_list))):
        rng = make_rng(eps_seed)
        alphas, betas = sample_annulus(chart, rng, pairs), sample_annulus(chart, rng, pairs)
        top = active_plaques(chart, eps) if n_max is None else n_max
        tasks = [(chart, fam, eps, complex(a), complex(b), deltas, top, spread) for a, b in zip(alphas, betas)]
        results = [r for r in map_tasks(_pair_sum, tasks, jobs) if r is not None]
        if not results:
            raise LabError("empty", f"every wedge task failed for ε = {eps}")
        sums = np.array([r[0] for r in results])
        unresolved = sum(r[1] for r in results)
        boxes = sum(r[2] for r in results)
        publish_tallies(sum((r[3] for r in results), Counter()), sum((r[4] for r in results), Counter()),
                        unresolved)
        count = len(results)
        for k, delta in enumerate(deltas):
            stderr = float(np.std(sums[:, k], ddof=1) / math.sqrt(count)) if count > 1 else math.nan
            rows.append(WedgeRow(eps=float(eps), delta=delta, J=float(np.mean(sums[:, k])), stderr=stderr,
                                 unresolved_frac=unresolved / max(boxes, 1), pairs=count))
        logger.info(f"Клин ε = {eps:g}: {count} пар, J({deltas[-1]:g}) = {rows[-1].J:.6g}")
    return rows
