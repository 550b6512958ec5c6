import json
from dataclasses import dataclass, field, asdict, fields
from typing import Dict, Optional, Any, List

import yaml

from core.errors import LabError

COMMANDS = ("singularities", "classify", "sector", "trace", "poisson", "wedge", "ergodic", "metric", "family-sweep")
STOCHASTIC = ("wedge", "ergodic", "metric")
METRIC_CHECKS = ("curvature", "mass", "schwarz")
FORMATS = ("json", "csv", "text")

# Поля-допуски: все должны быть строго положительны
TOLERANCES = ("residual_tol", "curvature_tol", "schwarz_tol", "mass_tol", "ks_max", "slack")


@dataclass
class RunConfig:
    """
    Параметры одного запуска команды.

    Комплексные числа и точки хранятся строками в формате флагов ("re,im",
    точки "z,w" с координатами вида "0.3" или "0.1+0.2j"), поэтому конфигурация
    без потерь проходит через JSON/YAML.
    """
    command: str
    preset: str = "jouanolou:2"
    chart: int = 0
    # Модельная точка и семейство возмущений
    lam: str = "-1,1"
    a1: str = "1,0"
    b1: str = "0.3,0"
    eps: List[float] = field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3])
    delta: List[float] = field(default_factory=lambda: [0.3])
    pairs: int = 2000
    spread: float = 0.0
    seed: Optional[int] = None
    # Трассировка и блуждание
    start: str = "0.3,0.2"
    arc: float = 50.0
    starts: List[str] = field(default_factory=lambda: ["0.3,0.2", "-0.4,0.1"])
    N: int = 20000
    horizon: int = 100000
    doublings: int = 3
    h_walk: Optional[float] = None
    spacing: float = 0.5
    extent: float = 1.0
    exit_start: str = "1,0.3"
    # Модельный лист
    trace_model: bool = False
    alpha: str = "0.5,0"
    points: int = 200
    # Интеграл Пуассона
    data: Optional[str] = None
    tail: str = "zero-beyond"
    decay: Optional[float] = None
    gamma: float = 2.0
    at: str = "0,1"
    # Метрика
    check: str = "curvature"
    samples: int = 1000
    radii: List[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    panels: int = 32
    # Семейство
    lambda_path: str = "-1,1 -> -1,1.2"
    steps: int = 5
    mass_radius: float = 0.2
    # Допуски проверок
    residual_tol: float = 1e-8
    curvature_tol: float = 1e-4
    schwarz_tol: float = 1e-8
    mass_tol: float = 0.01
    ks_max: float = 0.05
    slack: float = 1.05
    # Вывод
    out: Optional[str] = None
    format: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise LabError("config", f"unknown command '{self.command}'; valid commands: {list(COMMANDS)}")
        for name in TOLERANCES:
            value = getattr(self, name)
            if not value > 0:
                raise LabError("config", f"tolerance {name} must be positive, got {value}")
        if self.command in STOCHASTIC and self.seed is None:
            raise LabError("config", f"command '{self.command}' is stochastic and needs a seed")
        if self.check not in METRIC_CHECKS:
            raise LabError("config", f"unknown metric check '{self.check}'; valid checks: {list(METRIC_CHECKS)}")
        if self.format is not None and self.format not in FORMATS:
            raise LabError("config", f"unknown format '{self.format}'; valid formats: {list(FORMATS)}")
        for name in ("pairs", "N", "horizon", "samples", "points", "panels"):
            if getattr(self, name) < 1:
                raise LabError("config", f"{name} must be at least 1, got {getattr(self, name)}")
        if self.steps < 2:
            raise LabError("config", f"family sweep needs at least 2 steps, got {self.steps}")
        if self.doublings < 0:
            raise LabError("config", f"doublings must be nonnegative, got {self.doublings}")
        if not self.eps or not self.delta:
            raise LabError("config", "eps and delta lists must not be empty")

    @property
    def output_format(self) -> str:
        """Формат вывода: явный, иначе по расширению out, иначе text"""
        if self.format:
            return self.format
        if self.out and self.out.endswith(".json"):
            return "json"
        if self.out and self.out.endswith(".csv"):
            return "csv"
        return "text"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        valid = [f.name for f in fields(cls)]
        unknown = set(data) - set(valid)
        if unknown:
            raise LabError("config", f"unknown fields {sorted(unknown)}; valid fields: {valid}")
        if "command" not in data:
            raise LabError("config", "run configuration needs a command")
        return cls(**data)

    def save_to_file(self, file_path: str):
        """Сохраняет параметры запуска в JSON или YAML"""
        with open(file_path, 'w') as f:
            if file_path.endswith('.json'):
                json.dump(self.to_dict(), f, indent=2)
            elif file_path.endswith('.yaml') or file_path.endswith('.yml'):
                yaml.safe_dump(self.to_dict(), f)
            else:
                raise LabError("config", f"Unsupported file format: {file_path}")


def _read_file(path: str) -> Dict[str, Any]:
    with open(path, 'r') as f:
        if path.endswith('.json'):
            data = json.load(f)
        elif path.endswith('.yaml') or path.endswith('.yml'):
            data = yaml.safe_load(f)
        else:
            raise LabError("config", f"Unsupported file format: {path}")
    if not isinstance(data, dict):
        raise LabError("config", f"{path}: expected a mapping of run parameters")
    return data


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Параметры запуска из файла с наложением флагов (флаги со значением None не учитываются).

    Raises:
        LabError("config"): неизвестное поле, недопустимый допуск или команда
    """
    data = _read_file(path) if path else {}
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_dict(data)
