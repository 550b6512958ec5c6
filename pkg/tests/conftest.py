import numpy as np
import pytest

from core.config import LabConfig, set_config


@pytest.fixture(autouse=True)
def default_config():
    """Каждый тест работает с конфигурацией по умолчанию"""
    cfg = set_config(LabConfig())
    yield cfg
    set_config(LabConfig())


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
