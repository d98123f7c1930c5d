"""Linear delay difference systems with infinite memory on weighted phase spaces."""
from .phase_space import (
    SUP,
    PhaseVector,
    WeightSpec,
    embed,
    matrix_norm,
    norm,
    project,
    seq_norm,
    shift_pow,
    state_norm,
)
from .system import (
    ConditionReport,
    KernelSystem,
    TailCertificate,
    Verdict,
    apply,
    fading_condition,
    from_bounded_delay,
    operator_norm_interval,
    subdiagonalize,
)
from .solver import PhaseTrajectory, Trajectory, h_operator, reduced_solve, representation_residual, solve
from .analysis import (
    DecayProfile,
    FitVerdict,
    GainEstimate,
    StabilityReport,
    b0_sufficiency,
    classify,
    decay_profile,
    kernel_identify,
    lplq_gain,
    stability_fit,
)
from .registry import builtin
from .io import dump_spec, load_spec

__version__ = "0.1.0"
