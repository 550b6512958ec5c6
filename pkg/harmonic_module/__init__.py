# Инициализационный файл для модуля harmonic
from .boundary import (
    BoundaryFunction,
    ZERO_BEYOND,
    POWER_DECAY,
    from_samples,
    from_csv,
    from_callable,
    constant,
    indicator,
    cauchy_mixture,
    lorentzian,
    random_cauchy_mixture
)
from .poisson import (
    HalfPlanePoint,
    poisson_extend,
    poisson_extend_with_error,
    kernel_mass,
    weighted_norm,
    sector_harmonic_value,
    harmonic_residual,
    grid_residual,
    hyperbolic_distance,
    harnack_bounds
)
