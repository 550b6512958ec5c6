# Инициализационный файл для модуля singularity
from .linear_part import (
    linear_part,
    lambda_of,
    classify_hyperbolic,
    normalize_lambda,
    SWAP_AXES,
    CONJUGATE_ORIENTATION,
    HYPERBOLIC,
    RESONANT_REAL,
    DEGENERATE
)
from .linearization import (
    LinearizingJet,
    HyperbolicSingularity,
    linearize_jet,
    analyze_singularity,
    solve_homological,
    invert_series,
    jet_from_field
)
