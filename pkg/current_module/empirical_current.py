from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any, Sequence, Tuple

import numpy as np

from core.errors import LabError
from core.logging import get_logger
from tracer_module import FlowBoxGrid, LeafTrace, extract_plaques, OK

logger = get_logger()

# Число колец профиля плакетки по расстоянию до оси коробки
PROFILE_RINGS = 4


@dataclass
class EmpiricalCurrent:
    """
    Дискретизация тока T = ∫ h_α [V_α] dμ(α) на сетке коробок.

    weights[box, bin]: масса трансверсального бина (сумма 1);
    profiles[box, bin, ring]: средний профиль занятости плакеток бина;
    raw_mass: ненормированная масса (для слияния ансамблей).
    """
    signature: Tuple
    weights: np.ndarray
    raw_mass: float
    profiles: Optional[np.ndarray] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.weights.shape

    def support(self, threshold: float = 0.0) -> np.ndarray:
        """Маска бинов с массой больше threshold"""
        return self.weights > threshold

    def rows(self) -> List[Tuple[int, int, float]]:
        boxes, bins = np.nonzero(self.weights)
        return [(int(b), int(k), float(self.weights[b, k])) for b, k in zip(boxes, bins)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "boxes": self.shape[0],
            "bins": self.shape[1],
            "occupied": int(np.count_nonzero(self.weights)),
            "raw_mass": self.raw_mass,
            "provenance": self.provenance
        }


def normalized_current(signature: Tuple, counts: np.ndarray, profiles: Optional[np.ndarray] = None,
                       provenance: Optional[Dict[str, Any]] = None) -> EmpiricalCurrent:
    """
    Raises:
        LabError("empty"): нулевая занятость
    """
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise LabError("config", "occupation counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise LabError("empty", "no occupation recorded in any box")
    if profiles is not None:
        mass = profiles.sum(axis=2, keepdims=True)
        profiles = np.divide(profiles, mass, out=np.zeros_like(profiles), where=mass > 0)
    return EmpiricalCurrent(signature=signature, weights=counts / total, raw_mass=float(total),
                            profiles=profiles, provenance=dict(provenance or {}))


def accumulate_current(paths: Sequence[LeafTrace], grid: FlowBoxGrid,
                       multiplicities: Optional[Sequence[float]] = None,
                       provenance: Optional[Dict[str, Any]] = None) -> EmpiricalCurrent:
    """
    Мера занятости путей по коробкам и трансверсальным бинам, нормированная на 1.

    Каждая плакетка пути попадает в бин своего пересечения α с трансверсалью
    и добавляет число своих точек (с кратностью пути).

    Raises:
        LabError("empty"): пустой список путей или нулевая занятость
    """
    if not paths:
        raise LabError("empty", "no paths to accumulate")
    multiplicities = [1.0] * len(paths) if multiplicities is None else list(multiplicities)
    counts = np.zeros((len(grid.boxes), grid.n_bins))
    profiles = np.zeros((len(grid.boxes), grid.n_bins, PROFILE_RINGS))
    boxes = {b.box_id: b for b in grid.boxes}

    for path, weight in zip(paths, multiplicities):
        for plaque in extract_plaques(path, grid):
            if plaque.status != OK:
                continue
            box = boxes[plaque.box_id]
            counts[plaque.box_id, plaque.bin] += weight * len(plaque.points)
            offsets = np.abs(plaque.points[:, box.leaf_axis] - box.center[box.leaf_axis]) / box.radius
            rings = np.clip((offsets * PROFILE_RINGS).astype(int), 0, PROFILE_RINGS - 1)
            profiles[plaque.box_id, plaque.bin] += weight * np.bincount(rings, minlength=PROFILE_RINGS)

    if grid.bad_axis:
        logger.warning(f"Коробки с неподходящей осью пропущены: {sorted(grid.bad_axis)}")
    current = normalized_current(grid.signature, counts, profiles, provenance)
    logger.info(f"Ток по {len(paths)} путям: занято {np.count_nonzero(counts)} бинов")
    return current


def merge_currents(parts: Sequence[EmpiricalCurrent]) -> EmpiricalCurrent:
    """Слияние ансамблей: среднее с весами ненормированных масс"""
    if not parts:
        raise LabError("empty", "nothing to merge")
    for other in parts[1:]:
        _check_same_grid(parts[0], other)
    total = sum(p.raw_mass for p in parts)
    weights = sum(p.weights * p.raw_mass for p in parts) / total
    profiles = None
    if all(p.profiles is not None for p in parts):
        profiles = sum(p.profiles * (p.weights * p.raw_mass)[..., None] for p in parts)
        mass = profiles.sum(axis=2, keepdims=True)
        profiles = np.divide(profiles, mass, out=np.zeros_like(profiles), where=mass > 0)
    return EmpiricalCurrent(signature=parts[0].signature, weights=weights, raw_mass=total, profiles=profiles,
                            provenance={"merged": len(parts)})


def _check_same_grid(t1: EmpiricalCurrent, t2: EmpiricalCurrent):
    if t1.signature != t2.signature or t1.weights.shape != t2.weights.shape:
        raise LabError("grid-mismatch", "currents were accumulated on different grids")


def current_distance(t1: EmpiricalCurrent, t2: EmpiricalCurrent) -> float:
    """
    L1-расстояние нормированных масс по всем бинам, значение в [0, 2].

    Raises:
        LabError("grid-mismatch"): токи на разных сетках
    """
    _check_same_grid(t1, t2)
    return float(np.abs(t1.weights - t2.weights).sum())
