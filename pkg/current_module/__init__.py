# Инициализационный файл для модуля current
from .empirical_current import (
    EmpiricalCurrent,
    normalized_current,
    accumulate_current,
    merge_currents,
    current_distance,
    PROFILE_RINGS
)
from .walk import (
    WalkEnsemble,
    WalkResult,
    leafwise_walk,
    leaf_step,
    model_step,
    model_exit_walk,
    exit_distribution_test
)
from .ahlfors import (
    ModelGrid,
    ahlfors_average_model,
    model_current
)
