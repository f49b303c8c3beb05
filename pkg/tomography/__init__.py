from .exceptions import FitError, InsufficientDataError, RecordSchemaError
from .records import (
    ImagingNoiseSpec,
    ShotRecord,
    add_imaging_noise,
    atomic_write_text,
    bin_by_atom_number,
    format_records_csv,
    group_by_theta,
    post_select,
    read_records_csv,
    write_records_csv,
)
from .statistics import (
    CalibrationFit,
    Tomogram,
    TomogramRow,
    calibration_fit,
    drift_correct,
    format_tomogram_csv,
    subtract_imaging_noise,
    tomogram,
    write_tomogram_csv,
)
