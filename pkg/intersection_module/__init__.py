# Инициализационный файл для модуля intersection
from .perturbation import (
    PerturbationFamily,
    perturbed_slope,
    plaque_zeta,
    plaque_graph,
    perturbed_plaque_graph,
    slope_along_plaque,
    slope_variation
)
from .regions import (
    RegionConstants,
    RegionLabel,
    resolve_constants,
    default_s,
    classify_region,
    D1,
    D2,
    D3,
    OUTSIDE,
    CASE_1,
    CASE_1_MIRROR,
    CASE_2
)
from .finder import (
    SearchWindow,
    IntersectionPoint,
    IntersectionRecord,
    find_intersections,
    grid_count_oracle,
    region_tally,
    publish_tallies
)
from .estimates import (
    CheckResult,
    CountReport,
    ClosenessReport,
    check_count_bounds,
    closeness_checks
)
from .wedge import (
    WedgeRow,
    wedge_sum_experiment,
    kernel_boundary,
    harmonic_value,
    sample_annulus,
    active_plaques,
    plaque_range
)
