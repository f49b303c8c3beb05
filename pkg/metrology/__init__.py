from .exceptions import ConstraintInfeasibleError, UndefinedContrastError
from .squeezing import (
    DepthCurve,
    QuadratureMinimum,
    SqueezingReport,
    curve_value,
    depth_curve,
    entanglement_depth,
    from_db,
    min_variance_angle,
    oat_min_variance,
    squeezing_parameter,
    squeezing_report,
    to_db,
)
