# Инициализационный файл для модуля foliation
from .foliation_form import (
    AFFINE,
    HOMOGENEOUS,
    CHARTS,
    FoliationForm,
    make_foliation,
    degree_of,
    euler_residual,
    homogenize,
    restrict,
    chart_to_homogeneous,
    homogeneous_to_chart,
    chart_transition,
    best_chart,
    form_residual,
    vector_field_jacobian
)
from .presets import preset, parse_preset, parse_complex, linear_preset, jouanolou_preset, random_preset
from .singular_points import (
    SingularPointSet,
    singular_points,
    projective_singular_points,
    singular_points_in_chart
)
