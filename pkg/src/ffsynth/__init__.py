"""Time-scaled two-level control synthesis with inter-trajectory travel.

The package turns a solved reference sweep into faster or slower drive
schedules that reach the same final state, verifies each schedule by
independent re-integration, and maps feasible waveforms onto a tunable
transmon's flux axis.
"""

from .analysis import (
    FidelityReport,
    GapDirectionProfile,
    TrajectoryShiftSeries,
    gap_direction_scan,
    global_phase_check,
    trajectory_shift_analysis,
    verify_control,
)
from .config import ConfigError, DeviceConfig, RunConfig, load_config, parse_config
from .device import (
    FluxRangeError,
    FluxWaveform,
    RwaSchedule,
    TransmonSpec,
    coupling_strength,
    default_transmon_spec,
    ecc_for_coupling,
    flux_schedule_for,
    rwa_emulation_map,
    squid_ej,
    to_dimensionless_time,
    to_physical_time,
    transmon_frequency,
)
from .drives import (
    CosineSweepSpec,
    build_cosine_sweep,
    default_step_count,
    solve_reference,
)
from .dynamics import (
    DriveSchedule,
    IntegrationError,
    ReferenceTrajectory,
    TimeGrid,
    TwoLevelState,
    fidelity,
    integrate_schrodinger,
    overlap,
    state_at,
)
from .ffst import (
    BetaMap,
    ControlSchedule,
    FfstPhaseModel,
    MagnificationProfile,
    SynthesisError,
    alpha_scaled_control,
    beta_ff,
    build_beta_map,
    build_magnification,
    detect_phase_gaps,
    extract_scts,
    naive_control,
    solve_phase_roots,
    synthesize_control,
    synthesize_control_tunable,
)
from .itt import (
    BridgeSettings,
    ConstructionError,
    IttCostReport,
    OptimizerError,
    TravelPlan,
    VirtualTrajectory,
    build_virtual_trajectory,
    default_bridge_params,
    default_bridge_settings,
    itt_cost,
    optimize_virtual_trajectory,
    plan_through_gaps,
    plan_with_crossings,
)
from .sta import (
    AdiabaticTarget,
    EigenPair,
    StaPhaseModel,
    adiabatic_target,
    beta_sta,
    eigenpair,
    extract_sta_branches,
    solve_sta_phase,
    synthesize_sta_control,
)
from .zerocurves import (
    Gap,
    PhaseRoots,
    SpeedControlledTrajectory,
    branch_touch_times,
    detect_gaps,
    link_branches,
    sine_roots,
    wrap_phase,
)

__version__ = "0.1.0"

__all__ = [
    "AdiabaticTarget",
    "BetaMap",
    "BridgeSettings",
    "ConfigError",
    "ConstructionError",
    "ControlSchedule",
    "CosineSweepSpec",
    "DeviceConfig",
    "DriveSchedule",
    "EigenPair",
    "FfstPhaseModel",
    "FidelityReport",
    "FluxRangeError",
    "FluxWaveform",
    "Gap",
    "GapDirectionProfile",
    "IntegrationError",
    "IttCostReport",
    "MagnificationProfile",
    "OptimizerError",
    "PhaseRoots",
    "ReferenceTrajectory",
    "RunConfig",
    "RwaSchedule",
    "SpeedControlledTrajectory",
    "StaPhaseModel",
    "SynthesisError",
    "TimeGrid",
    "TrajectoryShiftSeries",
    "TransmonSpec",
    "TravelPlan",
    "TwoLevelState",
    "VirtualTrajectory",
    "alpha_scaled_control",
    "adiabatic_target",
    "beta_ff",
    "beta_sta",
    "branch_touch_times",
    "build_beta_map",
    "build_cosine_sweep",
    "build_magnification",
    "build_virtual_trajectory",
    "coupling_strength",
    "default_bridge_params",
    "default_bridge_settings",
    "default_step_count",
    "default_transmon_spec",
    "detect_gaps",
    "detect_phase_gaps",
    "ecc_for_coupling",
    "eigenpair",
    "extract_scts",
    "extract_sta_branches",
    "fidelity",
    "flux_schedule_for",
    "gap_direction_scan",
    "global_phase_check",
    "integrate_schrodinger",
    "itt_cost",
    "link_branches",
    "load_config",
    "naive_control",
    "optimize_virtual_trajectory",
    "overlap",
    "parse_config",
    "plan_through_gaps",
    "plan_with_crossings",
    "rwa_emulation_map",
    "sine_roots",
    "solve_phase_roots",
    "solve_reference",
    "solve_sta_phase",
    "squid_ej",
    "state_at",
    "synthesize_control",
    "synthesize_control_tunable",
    "synthesize_sta_control",
    "to_dimensionless_time",
    "to_physical_time",
    "trajectory_shift_analysis",
    "transmon_frequency",
    "verify_control",
    "wrap_phase",
]
