"""Simulator and analysis toolkit for a photonic Leggett-Garg test with a
variable-strength polarization measurement.

The package layers are:

- :mod:`lgi_weaksim.qcore` - polarization states, the meter qubit, and the
  controlled-sign coupling.
- :mod:`lgi_weaksim.optics` - the PPBS realization of the gate, including a
  photon-distinguishability model, expressed as a quantum channel.
- :mod:`lgi_weaksim.experiment` - the protocol: outcome probabilities,
  correlator and weak-value estimators, sweeps and extrema.
- :mod:`lgi_weaksim.stats` - multinomial count sampling, propagated errors
  and Monte Carlo trial ensembles.
- :mod:`lgi_weaksim.cli` - CSV-emitting command-line harness.
"""

from .errors import (
    DegenerateConditioningError,
    InsufficientPostselectionError,
    UndefinedSignificanceError,
    UnreachableTargetError,
    ZeroStrengthError,
)
from .experiment import (
    ExperimentConfig,
    GateModel,
    IDEAL_GATE,
    LGRecord,
    ProbabilityTable,
    ThetaGrid,
    WeakValueRecord,
    b_max,
    lg_b,
    run,
    s1_mean,
    s1s2_correlator,
    s2_mean,
    theta_sweep,
    violation_interval,
    weak_value,
)
from .optics import (
    CENTRAL_PPBS,
    COMPENSATOR_PPBS,
    EffectiveMap,
    ModeAmplitudeTable,
    PPBSSpec,
    build_network,
    choi_matrix,
    coincidence_amplitudes,
    effective_map,
    fit_visibility,
    process_fidelity_to_cz,
    two_photon_amplitudes,
)
from .qcore import (
    BasisOutcome,
    DensityOperator,
    JointState,
    MeterSetting,
    Observable,
    PureState,
    apply_cz,
    conditional_signal_state,
    from_knowledge,
    ket_signal,
    measure_joint,
    meter_ket,
    s1_observable,
    s2_observable,
    tensor,
)
from .stats import (
    CountTable,
    EstimateWithError,
    TrialPlan,
    TrialSummary,
    estimate_lg,
    estimate_weak_value,
    run_trials,
    sample_counts,
    significance,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "DegenerateConditioningError",
    "InsufficientPostselectionError",
    "UndefinedSignificanceError",
    "UnreachableTargetError",
    "ZeroStrengthError",
    # qcore
    "BasisOutcome",
    "DensityOperator",
    "JointState",
    "MeterSetting",
    "Observable",
    "PureState",
    "apply_cz",
    "conditional_signal_state",
    "from_knowledge",
    "ket_signal",
    "measure_joint",
    "meter_ket",
    "s1_observable",
    "s2_observable",
    "tensor",
    # optics
    "CENTRAL_PPBS",
    "COMPENSATOR_PPBS",
    "EffectiveMap",
    "ModeAmplitudeTable",
    "PPBSSpec",
    "build_network",
    "choi_matrix",
    "coincidence_amplitudes",
    "effective_map",
    "fit_visibility",
    "process_fidelity_to_cz",
    "two_photon_amplitudes",
    # experiment
    "ExperimentConfig",
    "GateModel",
    "IDEAL_GATE",
    "LGRecord",
    "ProbabilityTable",
    "ThetaGrid",
    "WeakValueRecord",
    "b_max",
    "lg_b",
    "run",
    "s1_mean",
    "s1s2_correlator",
    "s2_mean",
    "theta_sweep",
    "violation_interval",
    "weak_value",
    # stats
    "CountTable",
    "EstimateWithError",
    "TrialPlan",
    "TrialSummary",
    "estimate_lg",
    "estimate_weak_value",
    "run_trials",
    "sample_counts",
    "significance",
]
