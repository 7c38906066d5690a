"""Exact finite-depth verification of product odometers and flows built under a factorial ceiling."""
from .ceiling import (
    CeilingSpec,
    FlowPoint,
    NeedsDepth,
    OrbitTable,
    StopReason,
    SumTrace,
    SuspensionSystem,
    birkhoff_sums,
    ceiling_value,
    flow_apply,
    forward_horizon,
    k_value,
)
from .cocycle import LogValue, log_rn_value
from .space import (
    CoordinateScheme,
    CylinderSet,
    Relabeling,
    Weighting,
    cylinder_measure,
    first_open_index,
    predecessor,
    relabel,
    successor,
)
from .statistics import (
    conjugacy_consistency,
    decay_table,
    interval_bound_report,
    rectangle_inclusions,
    prop51_check,
    prop_a_window_set,
    rectangle_flow_window_measure,
    return_window_set,
)
from .windows import Window, parse_window, window_from_log_scale

__version__ = "0.1.0"
