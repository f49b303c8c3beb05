from .exceptions import ContourClippedError, InsufficientDataError
from .reconstruction import (
    INVERSE_SQRT_E,
    ContourResult,
    Marginal,
    ProjectionSet,
    WignerGrid,
    contour_at,
    default_grid,
    format_contour_csv,
    format_grid_csv,
    format_grid_gnuplot,
    forward_radon,
    inverse_radon,
    marginals_from_records,
    smooth_histogram,
    write_contour_csv,
    write_grid_csv,
    write_grid_gnuplot,
)
