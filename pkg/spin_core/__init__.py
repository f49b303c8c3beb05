from .collective_spin import (
    CollectiveSpinState,
    PulseSpec,
    SpinExpectations,
    SpinOperators,
    apply_rotation,
    evolve_oat,
    evolve_pulse,
    evolve_pulses,
    expectations,
    make_coherent_state,
    pole_state,
    pulsed_ground_state,
    quadrature_variance,
    rotate_z,
    sample_sz,
    spin_operators,
    su2_euler_angles,
    variance_along,
)
from .exceptions import InvalidStateError
