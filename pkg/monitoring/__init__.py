from .metrics import (
    record_newton,
    record_singular_points,
    record_intersection,
    record_unresolved_box,
    record_walk_paths,
    command_timer,
    write_metrics,
    REGISTRY
)

__all__ = [
    'record_newton',
    'record_singular_points',
    'record_intersection',
    'record_unresolved_box',
    'record_walk_paths',
    'command_timer',
    'write_metrics',
    'REGISTRY'
]
