"""Exception hierarchy shared by all solver modules."""


class KppStefanError(Exception):
    """Base class for all domain errors raised by this package."""


class HypothesisViolation(KppStefanError):
    """A reaction family failed one of the structural hypothesis checks."""


class CompatibleConditionViolation(KppStefanError):
    """A historical habitat [g(theta), h(theta)] is not nested in [g(0), h(0)]."""

    def __init__(self, theta: float, message: str = ""):
        self.theta = theta
        super().__init__(message or f"habitat at theta={theta} not contained in initial habitat")


class RangeViolation(KppStefanError):
    """Initial data violates 0 < phi <= ustar inside or phi = 0 at the fronts."""


class ConvergenceFailure(KppStefanError):
    """An iterative root search exhausted its budget without converging."""


class OmegaExit(KppStefanError):
    """A continuation iterate left the admissible complex strip (bug signal)."""


class NotConverged(KppStefanError):
    """Relaxation did not reach the requested steady-state defect."""


class TruncationSuspect(KppStefanError):
    """Doubling the truncation length moved the boundary slope too much."""


class BracketFailure(KppStefanError):
    """A bisection could not find a sign change on the search interval."""


class StabilityFailure(KppStefanError):
    """The interior solution grew too fast in a single step."""


class NestingViolation(KppStefanError):
    """Habitat nesting [g(t-tau), h(t-tau)] in [g(t), h(t)] failed (bug signal)."""


class WindowTooShort(KppStefanError):
    """Trajectory does not cover enough time for the requested estimate."""


class NotSpreading(KppStefanError):
    """Drift offsets requested for a run without a spreading verdict."""


class ConfigMismatch(KppStefanError):
    """Two runs cannot be compared: grids differ or dominance claim fails."""
