# Инициализационный файл для модуля metric
from .leaf_metric import (
    HarmonicLeafFunction,
    MetricSample,
    from_formula,
    on_halfplane,
    on_sector,
    richardson_gradient,
    tau_at,
    rho_at,
    curvature_at,
    metric_sample,
    is_critical,
    mu_density,
    chi_at,
    metric_norm,
    flow_step,
    conjugate_change,
    poincare_density,
    ahlfors_schwarz_gap,
    CHI_SCALE
)
from .mass import (
    mu_mass,
    mass_profile
)
