"""Simulator and analysis toolkit for heralded weak-measurement
amplification of small coherent states in truncated Fock space."""

from .elements import (
    DEFAULT_LAYOUT,
    LossChannel,
    LossSpec,
    ModeLayout,
    PPBSSpec,
    WaveplateSetting,
    beamsplitter,
    hwp,
    loss_channel,
    meter_waveplate_angles,
    ppbs,
    qwp,
    vacuum_restriction,
)
from .experiment import (
    CountingModel,
    FringeScan,
    HeraldingModel,
    MeasurementConvention,
    SweepResult,
    VisibilityFit,
    classical_visibility_bound,
    gain_sweep,
    gain_vs_phi,
    measure_input_size,
    simulate_counts,
    state_size,
    true_input_size,
    visibility_experiment,
    with_sampled_output,
)
from .fock import (
    BasisSizeError,
    DensityOperator,
    FockBasis,
    ModeTransform,
    ProjectionResult,
    StateVector,
    TruncationError,
    apply,
    basis_size,
    build_basis,
    compose_transforms,
    lift_mode_transform,
    occupancy_distribution,
    occupancy_probability,
    partial_trace,
    permanent,
    project,
    tensor,
)
from .protocol import (
    AnalyticPrediction,
    InfiniteGainError,
    MeterSetting,
    ProtocolOutcome,
    SignalSpec,
    analytic,
    gate_operator,
    ideal_cz,
    ideal_herald_probability,
    meter_projector,
    meter_state,
    phase_averaged_state,
    phi_for_gain,
    ppbs_cz_circuit,
    run_nla,
    truncated_coherent,
    two_mode_coherent,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticPrediction",
    "BasisSizeError",
    "CountingModel",
    "DEFAULT_LAYOUT",
    "DensityOperator",
    "FockBasis",
    "FringeScan",
    "HeraldingModel",
    "InfiniteGainError",
    "LossChannel",
    "LossSpec",
    "MeasurementConvention",
    "MeterSetting",
    "ModeLayout",
    "ModeTransform",
    "PPBSSpec",
    "ProjectionResult",
    "ProtocolOutcome",
    "SignalSpec",
    "StateVector",
    "SweepResult",
    "TruncationError",
    "VisibilityFit",
    "WaveplateSetting",
    "analytic",
    "apply",
    "basis_size",
    "beamsplitter",
    "build_basis",
    "classical_visibility_bound",
    "compose_transforms",
    "gain_sweep",
    "gain_vs_phi",
    "gate_operator",
    "hwp",
    "ideal_cz",
    "ideal_herald_probability",
    "lift_mode_transform",
    "loss_channel",
    "measure_input_size",
    "meter_projector",
    "meter_state",
    "meter_waveplate_angles",
    "occupancy_distribution",
    "occupancy_probability",
    "partial_trace",
    "permanent",
    "phase_averaged_state",
    "phi_for_gain",
    "ppbs",
    "ppbs_cz_circuit",
    "project",
    "qwp",
    "run_nla",
    "simulate_counts",
    "state_size",
    "tensor",
    "true_input_size",
    "truncated_coherent",
    "two_mode_coherent",
    "vacuum_restriction",
    "visibility_experiment",
    "with_sampled_output",
]
