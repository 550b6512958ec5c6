from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Dict, Any

import numpy as np

from core.errors import LabError
from core.logging import get_logger

logger = get_logger()

ZERO_BEYOND = "zero-beyond"
POWER_DECAY = "power-decay"


@dataclass(frozen=True)
class BoundaryFunction:
    """
    Неотрицательные граничные данные H̃ на вещественной оси.

    Задаются отсчетами (линейная интерполяция внутри, модель хвоста снаружи)
    либо замкнутой формулой. decay: показатель p в H̃(x) ~ |x|^(−p) на бесконечности
    (для zero-beyond бесконечен).
    """
    x: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    tail_model: str = ZERO_BEYOND
    decay: float = float("inf")
    description: str = ""
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False, compare=False)
    breakpoints: Tuple[float, ...] = ()
    # Точное гармоническое продолжение (U, V) -> значение, если известно
    exact: Optional[Callable[[float, float], float]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.func is None:
            if self.x is None or self.values is None:
                raise LabError("config", "boundary data needs samples or a formula")
            x = np.asarray(self.x, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if x.ndim != 1 or x.shape != values.shape or x.size < 2:
                raise LabError("config", "boundary samples must be two equal 1-D arrays of length >= 2")
            if np.any(np.diff(x) <= 0):
                raise LabError("config", "boundary sample abscissae must be strictly increasing")
            if np.any(values < 0):
                raise LabError("config", "boundary values must be nonnegative")
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "values", values)
            if self.tail_model == ZERO_BEYOND:
                object.__setattr__(self, "decay", float("inf"))
            elif self.tail_model != POWER_DECAY:
                raise LabError("config", f"unknown tail model '{self.tail_model}'")
            if not self.breakpoints:
                object.__setattr__(self, "breakpoints", (float(x[0]), float(x[-1])))

    @property
    def is_sampled(self) -> bool:
        return self.func is None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(x), dtype=float)
        inside = np.interp(x, self.x, self.values, left=0.0, right=0.0)
        if self.tail_model == ZERO_BEYOND:
            return inside
        with np.errstate(divide="ignore", invalid="ignore"):
            left = self.values[0] * (np.abs(x) / abs(self.x[0])) ** (-self.decay) if self.x[0] != 0 else 0.0
            right = self.values[-1] * (np.abs(x) / abs(self.x[-1])) ** (-self.decay) if self.x[-1] != 0 else 0.0
        return np.where(x < self.x[0], left, np.where(x > self.x[-1], right, inside))

    def support(self) -> Tuple[float, float]:
        if self.is_sampled and self.tail_model == ZERO_BEYOND:
            return float(self.x[0]), float(self.x[-1])
        return -np.inf, np.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            "description": self.description,
            "tail_model": self.tail_model,
            "decay": self.decay if np.isfinite(self.decay) else None,
            "samples": None if self.x is None else len(self.x)
        }


def from_samples(x: Sequence[float], values: Sequence[float], tail_model: str = ZERO_BEYOND,
                 decay: Optional[float] = None, description: str = "samples") -> BoundaryFunction:
    if tail_model == POWER_DECAY and decay is None:
        raise LabError("config", "power-decay tail needs an exponent")
    return BoundaryFunction(x=np.asarray(x, float), values=np.asarray(values, float), tail_model=tail_model,
                            decay=float("inf") if decay is None else float(decay), description=description)


def from_csv(path: str, tail_model: str = ZERO_BEYOND, decay: Optional[float] = None) -> BoundaryFunction:
    """Читает CSV с колонками x,value (строка заголовка допускается)"""
    with open(path) as f:
        first = f.readline()
    try:
        [float(t) for t in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.shape[1] < 2:
        raise LabError("config", f"{path}: expected columns x,value")
    order = np.argsort(data[:, 0])
    return from_samples(data[order, 0], data[order, 1], tail_model, decay, description=path)


def from_callable(func: Callable[[np.ndarray], np.ndarray], decay: float, description: str = "formula",
                  breakpoints: Sequence[float] = (), exact=None) -> BoundaryFunction:
    return BoundaryFunction(func=func, decay=float(decay), tail_model=POWER_DECAY, description=description,
                            breakpoints=tuple(float(b) for b in breakpoints), exact=exact)


def constant(value: float = 1.0) -> BoundaryFunction:
    value = float(value)
    if value < 0:
        raise LabError("config", "boundary values must be nonnegative")
    return from_callable(lambda x: np.full(np.shape(x), value), decay=0.0 if value else float("inf"),
                         description=f"constant({value:g})", exact=lambda u, v: value)


def indicator(a: float, b: float) -> BoundaryFunction:
    """Индикатор отрезка [a, b]"""
    a, b = float(a), float(b)

    def exact(u, v):
        return (np.arctan2(b - u, v) - np.arctan2(a - u, v)) / np.pi

    bounded = np.isfinite(a) and np.isfinite(b)
    return BoundaryFunction(func=lambda x: ((x >= a) & (x <= b)).astype(float),
                            decay=float("inf") if bounded else 0.0,
                            tail_model=ZERO_BEYOND if bounded else POWER_DECAY,
                            description=f"indicator[{a:g},{b:g}]",
                            breakpoints=tuple(t for t in (a, b) if np.isfinite(t)), exact=exact)


def cauchy_mixture(weights: Sequence[float], centers: Sequence[float], widths: Sequence[float]) -> BoundaryFunction:
    """
    Смесь ядер Коши Σ w_k/π · s_k/((x − x_k)² + s_k²).

    Гармоническое продолжение известно точно: Σ w_k (V + s_k)/(π((U − x_k)² + (V + s_k)²)).
    """
    w = np.asarray(weights, float)
    c = np.asarray(centers, float)
    s = np.asarray(widths, float)
    if np.any(w < 0) or np.any(s <= 0):
        raise LabError("config", "Cauchy mixture needs nonnegative weights and positive widths")

    def func(x):
        x = np.asarray(x, float)[..., None]
        return np.sum(w / np.pi * s / ((x - c) ** 2 + s ** 2), axis=-1)

    def exact(u, v):
        return float(np.sum(w * (v + s) / (np.pi * ((u - c) ** 2 + (v + s) ** 2))))

    return from_callable(func, decay=2.0, description=f"cauchy-mixture({len(w)})", breakpoints=tuple(c), exact=exact)


def lorentzian() -> BoundaryFunction:
    """H̃(x) = 1/(1 + x²); продолжение 1/(1 + V) при U = 0"""
    return cauchy_mixture([np.pi], [0.0], [1.0])


def random_cauchy_mixture(rng: np.random.Generator, terms: int = 3, spread: float = 2.0) -> BoundaryFunction:
    """Случайная положительная смесь для тестов и экспериментов"""
    return cauchy_mixture(rng.uniform(0.2, 1.0, terms), rng.uniform(-spread, spread, terms),
                          rng.uniform(0.2, 1.5, terms))
