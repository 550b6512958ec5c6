import traceback
from typing import Callable, Any

from core.errors import LabError
from core.logging import get_logger

logger = get_logger()


def run_task(task_func: Callable[..., Any], *args, **kwargs) -> Any:
    """
    Обертка для задач пула, которая обрабатывает все исключения
    и не дает одной упавшей задаче сорвать весь эксперимент.

    Args:
        task_func: Функция для выполнения
        *args: Аргументы для функции
        **kwargs: Именованные аргументы для функции

    Returns:
        Результат выполнения функции или None в случае исключения
    """
    try:
        return task_func(*args, **kwargs)
    except KeyboardInterrupt:
        raise
    except LabError as e:
        # Ожидаемые численные отказы: без стека
        logger.warning(f"Задача {task_func.__name__} завершилась ошибкой {e.code}: {e.message}")
        return None
    except Exception as e:
        logger.error(f"Critical error in {task_func.__name__}: {e}")
        logger.error(f"Stack trace: {traceback.format_exc()}")
        return None
