import time
from typing import Dict
from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

# Отдельный реестр: метрики пишутся в файл по завершении команды, HTTP-сервера нет
REGISTRY = CollectorRegistry()

# Метрики алгебры
NEWTON_SOLVES = Counter(
    'foliation_lab_newton_solves_total',
    'Total number of Newton polishing runs',
    ['status'],
    registry=REGISTRY
)

SINGULAR_POINTS = Counter(
    'foliation_lab_singular_points_total',
    'Total number of singular points located',
    ['chart'],
    registry=REGISTRY
)

# Метрики пересечений
INTERSECTION_POINTS = Counter(
    'foliation_lab_intersection_points_total',
    'Total number of certified plaque intersection points',
    ['region'],
    registry=REGISTRY
)

UNRESOLVED_BOXES = Counter(
    'foliation_lab_unresolved_boxes_total',
    'Total number of boxes where the winding count stayed inconclusive',
    registry=REGISTRY
)

# Метрики диффузии
WALK_PATHS = Counter(
    'foliation_lab_walk_paths_total',
    'Total number of leafwise walk paths',
    ['status'],
    registry=REGISTRY
)

# Метрики команд
COMMAND_DURATION = Histogram(
    'foliation_lab_command_duration_seconds',
    'Command duration in seconds',
    ['command'],
    buckets=[0.01, 0.1, 1.0, 10.0, 60.0, 300.0, 900.0],
    registry=REGISTRY
)

SYSTEM_INFO = Gauge(
    'foliation_lab_info',
    'Information about foliation-lab',
    ['version'],
    registry=REGISTRY
)


# Класс для измерения времени выполнения операций
class Timer:
    def __init__(self, metric: Histogram, labels: Dict[str, str]):
        self.metric = metric
        self.labels = labels
        self.start_time = None
        self.elapsed = 0.0

    def __enter__(self):
        self.start_time = time.time()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.time() - self.start_time
        self.metric.labels(**self.labels).observe(self.elapsed)


def record_newton(status: str, count: int = 1):
    """Записывает исход полировки Ньютоном"""
    NEWTON_SOLVES.labels(status=status).inc(count)


def record_singular_points(chart: int, count: int):
    """Записывает число найденных особых точек в карте"""
    SINGULAR_POINTS.labels(chart=str(chart)).inc(count)


def record_intersection(region: str, count: int = 1):
    """Записывает найденные точки пересечения плакеток"""
    INTERSECTION_POINTS.labels(region=region).inc(count)


def record_unresolved_box(count: int = 1):
    """Записывает коробки с неразрешенным числом вращения"""
    UNRESOLVED_BOXES.inc(count)


def record_walk_paths(status: str, count: int = 1):
    """Записывает пути блуждания (ok/discarded)"""
    WALK_PATHS.labels(status=status).inc(count)


def command_timer(command: str) -> Timer:
    """Возвращает таймер для измерения времени выполнения команды"""
    return Timer(COMMAND_DURATION, {"command": command})


def write_metrics(path: str, version: str):
    """Сохраняет метрики в текстовом формате Prometheus"""
    SYSTEM_INFO.labels(version=version).set(1)
    write_to_textfile(path, REGISTRY)
