"""Exception hierarchy.

Every error carries a short ``category`` string which the command line
front-end prints so that scripts can react to the failure class.
"""


class SGSliceError(Exception):
    category = "error"


class ConfigError(SGSliceError, ValueError):
    category = "config"


class SingularSeedError(SGSliceError, ValueError):
    """A seed with z2 <= 0, where the cost is singular."""

    category = "singular-seed"


class DegenerateSeedsError(SGSliceError, ValueError):
    """Two seeds coincide so their bisector is undefined."""

    category = "degenerate-seeds"


class IntegrityError(SGSliceError, ArithmeticError):
    category = "integrity"


class SolverStateError(SGSliceError, RuntimeError):
    category = "solver-state"


class NonConvergenceError(SGSliceError, RuntimeError):
    """Newton did not reach the tolerance. ``state`` holds the last iterate."""

    category = "non-convergence"

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


class InitializationError(SGSliceError, RuntimeError):
    category = "initialization"


class BlowUpError(SGSliceError, RuntimeError):
    category = "blow-up"


class MetricError(SGSliceError, ValueError):
    category = "metric"


class StudyError(SGSliceError, RuntimeError):
    """A member run of a convergence study failed."""

    category = "study"


class OutputError(SGSliceError, OSError):
    category = "io"
