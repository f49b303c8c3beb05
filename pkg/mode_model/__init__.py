from .exceptions import ConvergenceError
from .split_trap import (
    BOHR_RADIUS,
    RB87_MASS,
    ChiLambdaRow,
    ModeProfile,
    ScatteringSpec,
    SplitProfile,
    TrapSpec,
    amplitude_overlap,
    chemical_potential,
    chi_from_modes,
    chi_lambda_curve,
    default_grid,
    overlap_lambda,
    split_sequence_profile,
    stationary_modes,
)
