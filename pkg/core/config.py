import os
import json
import yaml
from typing import Dict, Optional, Any
from dataclasses import dataclass, field, asdict, fields


@dataclass
class AlgebraConfig:
    newton_tol: float = 1e-12  # Допуск невязки (max-норма) для метода Ньютона
    newton_max_iter: int = 50
    jacobian_cond_cap: float = 1e12  # Выше этого числа обусловленности якобиан считается вырожденным
    leading_coeff_tol: float = 1e-12

    def to_dict(self):
        return asdict(self)


@dataclass
class FoliationConfig:
    search_radius: float = 10.0  # Окно поиска особых точек ‖(z,w)‖∞ ≤ R
    merge_distance: float = 1e-7
    euler_tol: float = 1e-10
    residual_tol: float = 1e-8
    euler_samples: int = 200

    def to_dict(self):
        return asdict(self)


@dataclass
class SingularityConfig:
    tol_im: float = 1e-9
    degeneracy_band: float = 0.05  # Полоса |Re λ − 1| < band, в которой оси меняются местами
    jet_order: int = 6
    resonance_tol: float = 1e-9
    singular_residual: float = 1e-6

    def to_dict(self):
        return asdict(self)


@dataclass
class TracerConfig:
    rtol: float = 1e-9
    atol: float = 1e-12
    chart_switch: float = 1.5  # Переход в другую карту при |z| или |w| > 1.5
    r_stop: float = 1e-4
    r_sing: float = 0.05
    max_step: float = 0.05
    min_step: float = 1e-14

    def to_dict(self):
        return asdict(self)


@dataclass
class HarmonicConfig:
    epsabs: float = 1e-11
    epsrel: float = 1e-10
    limit: int = 400

    def to_dict(self):
        return asdict(self)


@dataclass
class CurrentConfig:
    bins_per_side: int = 8  # 8×8 = 64 трансверсальных бина на коробку
    h_walk: float = 1e-3
    substeps: int = 4
    leaf_tol: float = 1e-6
    max_refine: int = 6

    def to_dict(self):
        return asdict(self)


@dataclass
class IntersectionConfig:
    c: float = 0.1
    C: Optional[float] = None  # None ⇒ 3·max(|a1|, |b1|)
    delta: float = 0.3
    C1: float = 4.0
    r: float = 0.05
    s: Optional[float] = None  # None ⇒ подбирается из условия 1/2 < 1 + 2sbπ/a < 3/2
    d: float = 0.05
    max_depth: int = 14
    min_box: float = 1e-9
    boundary_samples: int = 64
    pole_exclusion: float = 1e-6

    def to_dict(self):
        return asdict(self)


@dataclass
class MetricConfig:
    h_fd: float = 1e-3
    tol_crit: float = 1e-8

    def to_dict(self):
        return asdict(self)


@dataclass
class LoggingConfig:
    level: str = "INFO"
    file_path: Optional[str] = None

    def to_dict(self):
        return asdict(self)


@dataclass
class MonitoringConfig:
    metrics_file: Optional[str] = None

    def to_dict(self):
        return asdict(self)


_SECTIONS = {
    "algebra": AlgebraConfig,
    "foliation": FoliationConfig,
    "singularity": SingularityConfig,
    "tracer": TracerConfig,
    "harmonic": HarmonicConfig,
    "current": CurrentConfig,
    "intersection": IntersectionConfig,
    "metric": MetricConfig,
    "logging": LoggingConfig,
    "monitoring": MonitoringConfig,
}


def _build_section(name: str, data: Optional[Dict[str, Any]]):
    """Создает секцию конфигурации, отвергая неизвестные поля"""
    section_cls = _SECTIONS[name]
    data = data or {}
    valid = {f.name for f in fields(section_cls)}
    unknown = set(data) - valid
    if unknown:
        raise ValueError(
            f"Unknown fields in section '{name}': {sorted(unknown)}; valid fields: {sorted(valid)}"
        )
    return section_cls(**data)


@dataclass
class LabConfig:
    algebra: AlgebraConfig = field(default_factory=AlgebraConfig)
    foliation: FoliationConfig = field(default_factory=FoliationConfig)
    singularity: SingularityConfig = field(default_factory=SingularityConfig)
    tracer: TracerConfig = field(default_factory=TracerConfig)
    harmonic: HarmonicConfig = field(default_factory=HarmonicConfig)
    current: CurrentConfig = field(default_factory=CurrentConfig)
    intersection: IntersectionConfig = field(default_factory=IntersectionConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    monitoring: MonitoringConfig = field(default_factory=MonitoringConfig)
    jobs: int = 1  # Число процессов в пуле воркеров

    def to_dict(self):
        result = {name: getattr(self, name).to_dict() for name in _SECTIONS}
        result["jobs"] = self.jobs
        return result

    def save_to_file(self, file_path: str):
        """Сохраняет конфигурацию в файл"""
        with open(file_path, 'w') as f:
            if file_path.endswith('.json'):
                json.dump(self.to_dict(), f, indent=2)
            elif file_path.endswith('.yaml') or file_path.endswith('.yml'):
                yaml.safe_dump(self.to_dict(), f)
            else:
                raise ValueError(f"Unsupported file format: {file_path}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LabConfig':
        """Создает конфигурацию из словаря"""
        data = dict(data or {})
        unknown = set(data) - set(_SECTIONS) - {"jobs"}
        if unknown:
            raise ValueError(
                f"Unknown configuration keys: {sorted(unknown)}; valid keys: {sorted(list(_SECTIONS) + ['jobs'])}"
            )
        sections = {name: _build_section(name, data.get(name)) for name in _SECTIONS}
        return cls(jobs=int(data.get("jobs", 1)), **sections)

    @classmethod
    def load_from_file(cls, file_path: str) -> 'LabConfig':
        """Загружает конфигурацию из файла"""
        with open(file_path, 'r') as f:
            if file_path.endswith('.json'):
                data = json.load(f)
            elif file_path.endswith('.yaml') or file_path.endswith('.yml'):
                data = yaml.safe_load(f)
            else:
                raise ValueError(f"Unsupported file format: {file_path}")

        config = cls.from_dict(data or {})
        config.apply_env()
        return config

    @classmethod
    def load_from_env(cls) -> 'LabConfig':
        """Загружает конфигурацию из переменных окружения"""
        config = cls()
        config.apply_env()
        return config

    def apply_env(self):
        """Переопределяет поля значениями из переменных окружения FOLIATION_LAB_*"""
        if os.getenv('FOLIATION_LAB_JOBS'):
            self.jobs = int(os.getenv('FOLIATION_LAB_JOBS'))
        if os.getenv('FOLIATION_LAB_LOG_LEVEL'):
            self.logging.level = os.getenv('FOLIATION_LAB_LOG_LEVEL')
        if os.getenv('FOLIATION_LAB_LOG_FILE'):
            self.logging.file_path = os.getenv('FOLIATION_LAB_LOG_FILE')
        if os.getenv('FOLIATION_LAB_METRICS_FILE'):
            self.monitoring.metrics_file = os.getenv('FOLIATION_LAB_METRICS_FILE')


# Глобальный экземпляр конфигурации
config = None


def load_config(config_file: Optional[str] = None) -> LabConfig:
    """Загружает конфигурацию из файла или переменных окружения"""
    global config

    if config_file and os.path.exists(config_file):
        config = LabConfig.load_from_file(config_file)
    else:
        config = LabConfig.load_from_env()

    return config


def set_config(new_config: LabConfig) -> LabConfig:
    """Подменяет текущую конфигурацию (используется CLI и тестами)"""
    global config
    config = new_config
    return config


def get_config() -> LabConfig:
    """Возвращает текущую конфигурацию"""
    global config
    if config is None:
        config = load_config()
    return config
