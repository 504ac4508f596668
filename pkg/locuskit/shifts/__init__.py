from locuskit.shifts.discrete import (
    MedoidShiftResult,
    ModeShiftResult,
    NNShiftResult,
    RelaxationResult,
    hopfield_energy,
    medoid_shift,
    mode_shift,
    nn_shift,
    relaxation_label,
    sign,
)
from locuskit.shifts.meanshift import (
    ShiftResult,
    bbox_diagonal,
    default_merge_radius,
    default_tolerance,
    extract_clusters,
    mean_shift,
    pc_shift,
    stochastic_mean_shift,
)
