"""Event-triggered Luenberger observers for LTI systems.

Design an observer-side certificate, select the transmission trigger
parameters, simulate the hybrid closed loop (flows between transmissions,
jumps at them), and verify the decay certificate, dwell-time bound and
quiescence behavior on the simulated arcs.
"""

from .analysis import (
    CertificateReport,
    IetStats,
    check_certificate,
    detect_quiescence,
    iet_stats,
    measured_M,
)
from .battery import (
    BatteryParams,
    ExperimentReport,
    SweepConfig,
    build_battery_plant,
    phev_profile,
    run_sweep,
)
from .design import (
    IssCertificate,
    LtiPlant,
    TriggerParams,
    dwell_time_bound,
    iss_constants,
    normalize_feedthrough,
    params_from_gains,
    select_parameters,
)
from .hybrid import (
    HybridArc,
    HybridState,
    SimConfig,
    derived_error_states,
    flow_derivative,
    jump,
    read_arc_csv,
    simulate,
    trigger_margin,
    write_arc_csv,
)
from .linalg import eig_sym_extremes, is_hurwitz, norm2, solve_lyapunov
from .signals import InputSignal

__version__ = "0.1.0"

__all__ = [
    "BatteryParams",
    "CertificateReport",
    "ExperimentReport",
    "HybridArc",
    "HybridState",
    "IetStats",
    "InputSignal",
    "IssCertificate",
    "LtiPlant",
    "SimConfig",
    "SweepConfig",
    "TriggerParams",
    "build_battery_plant",
    "check_certificate",
    "derived_error_states",
    "detect_quiescence",
    "dwell_time_bound",
    "eig_sym_extremes",
    "flow_derivative",
    "iet_stats",
    "is_hurwitz",
    "iss_constants",
    "jump",
    "measured_M",
    "norm2",
    "normalize_feedthrough",
    "params_from_gains",
    "phev_profile",
    "read_arc_csv",
    "run_sweep",
    "select_parameters",
    "simulate",
    "solve_lyapunov",
    "trigger_margin",
    "write_arc_csv",
]
