from .exceptions import CalibrationError
from .trajectories import (
    DEFAULT_RABI,
    LOSS_CHANNELS,
    LossSpec,
    NoiseRealization,
    NoiseSpec,
    SequenceSpec,
    TrajectoryResult,
    TwistSpec,
    calibrate_twist,
    ensemble,
    ensemble_scan,
    evolve_with_losses,
    run_sequence,
    sample_noise,
    twist_floor_db,
)
