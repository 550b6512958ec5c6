# Инициализационный файл для модуля tracer
from .line_field import (
    line_field_at,
    field_at,
    tangency,
    transition_jacobian,
    refit_phase,
    SINGULAR_NORM
)
from .leaf_tracer import (
    LeafTrace,
    TraceSegment,
    ModelHandoff,
    SingularCache,
    trace_leaf,
    model_handoff,
    continue_in_model,
    HORIZON,
    NEAR_SINGULARITY,
    LEFT_ALL_CHARTS
)
from .flow_boxes import (
    FlowBox,
    FlowBoxGrid,
    Plaque,
    build_grid,
    lattice_grid,
    axis_projection,
    transversal_crossing,
    extract_plaques,
    OK,
    BAD_AXIS
)
