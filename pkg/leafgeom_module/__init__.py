# Инициализационный файл для модуля leafgeom
from .sector_chart import (
    SectorChart,
    sector_of,
    to_halfplane,
    to_halfplane_array,
    from_halfplane,
    holonomy_step,
    bidisc_window,
    plaque_bounds,
    plaque_index,
    lowest_plaque,
    EDGE_TOL
)
from .leaf_point import (
    LeafPoint,
    psi_param,
    psi_array,
    tangency_residual,
    model_tangency,
    leaf_coordinates,
    model_polyline
)
