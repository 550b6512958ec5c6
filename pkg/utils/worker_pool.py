from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Any, List, Optional, Sequence

import numpy as np

from core.config import get_config
from core.logging import get_logger
from utils.task_wrapper import run_task

logger = get_logger()


def resolve_jobs(jobs: Optional[int] = None) -> int:
    """Число воркеров: аргумент, иначе конфигурация (FOLIATION_LAB_JOBS уже учтен в ней)"""
    if jobs is None:
        jobs = get_config().jobs
    return max(1, int(jobs))


def map_tasks(func: Callable[..., Any], tasks: Sequence[tuple], jobs: Optional[int] = None) -> List[Any]:
    """
    Применяет функцию уровня модуля к списку задач.

    Результаты возвращаются в порядке задач, поэтому слияние не зависит
    от порядка завершения воркеров. Упавшие задачи дают None.
    """
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) <= 1:
        return [run_task(func, *task) for task in tasks]

    logger.debug(f"Запуск {len(tasks)} задач {func.__name__} на {jobs} процессах")
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_task, func, *task) for task in tasks]
        return [future.result() for future in futures]


def spawn_seeds(seed: int, count: int) -> List[np.random.SeedSequence]:
    """Дочерние seed-последовательности для задач (разбиваемый счетчик)"""
    return np.random.SeedSequence(seed).spawn(count)


def make_rng(seed_seq) -> np.random.Generator:
    """Генератор на счетчиковом Philox"""
    if not isinstance(seed_seq, np.random.SeedSequence):
        seed_seq = np.random.SeedSequence(seed_seq)
    return np.random.Generator(np.random.Philox(seed_seq))
