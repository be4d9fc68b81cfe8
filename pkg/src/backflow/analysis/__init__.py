from .distinguishability import (
    HelstromSplit,
    Trajectory,
    blp_integral,
    flow_rate,
    helstrom_norm,
    random_pair_trajectories,
    trace_distance,
    trajectory,
    write_trajectories_csv,
)
from .divisibility import (
    DivisibilityReport,
    IntermediateMap,
    NonCPPair,
    StepRecord,
    choi_excess,
    classify_step,
    intermediate_map,
    kernel_basis,
    rhp_indicator,
    rhp_integral,
    scan_cp_divisibility,
)
