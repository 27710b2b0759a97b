"""Solver suite for the time-delayed Fisher-KPP equation with Stefan fronts."""

from .errors import (
    BracketFailure,
    CompatibleConditionViolation,
    ConfigMismatch,
    ConvergenceFailure,
    HypothesisViolation,
    KppStefanError,
    NestingViolation,
    NotConverged,
    NotSpreading,
    OmegaExit,
    RangeViolation,
    StabilityFailure,
    TruncationSuspect,
    WindowTooShort,
)
from .model import (
    InitialHistory,
    ProblemSpec,
    RawHistory,
    ReactionFamily,
    eval_f,
    eval_fprime,
    make_cosine_history,
    make_reaction,
    validate_history,
)
from .characteristic import (
    CharacteristicQuery,
    ComplexRoot,
    c0,
    complex_root_in_omega,
    delta,
    min_real_root,
)
from .semiwave import (
    SemiWaveNumerics,
    SemiWaveProfile,
    SpeedResult,
    cstar,
    eta,
    solve_profile,
    speed_curve,
)
from .fbsolver import (
    NumericsConfig,
    Snapshot,
    SolverState,
    Trajectory,
    delay_lookup,
    front_gradient,
    init_state,
    run,
    step,
)
from .diagnostics import (
    DriftEstimate,
    Thresholds,
    Verdict,
    classify,
    compare_runs,
    drift_offsets,
    front_speed,
    profile_error,
    spreading_length_threshold,
)

__version__ = "0.1.0"
