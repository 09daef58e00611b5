class ProbmorphError(Exception):
    """Base class for library errors."""


class SpaceMismatchError(ProbmorphError, ValueError):
    pass


class OutsideSpaceError(ProbmorphError, ValueError):
    pass


class ZeroMassError(ProbmorphError, ValueError):
    pass


class IncomparableError(ProbmorphError, ValueError):
    """Two density components cannot be compared without a common grid."""


class MethodMismatchError(ProbmorphError, ValueError):
    """The requested posterior method does not apply to this model."""


class NonConvergenceError(ProbmorphError, RuntimeError):
    pass
