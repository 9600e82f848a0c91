"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 2 for a violated
mathematical precondition, 3 for a numerical failure.
"""


class LOBError(Exception):
    exit_code = 3


class InvalidConfig(LOBError, ValueError):
    exit_code = 1


class PreconditionError(LOBError):
    exit_code = 2


class NumericalError(LOBError):
    exit_code = 3


class NonPositiveDepth(PreconditionError):
    pass


class NonPositiveResilience(PreconditionError):
    pass


class NotPositiveDefinite(PreconditionError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateDenominator(PreconditionError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConditionViolated(PreconditionError):
    def __init__(self, message, which=None, witness=None):
        super().__init__(message)
        self.which = which
        self.witness = witness


class QuadratureFailure(NumericalError):
    pass


class RootBracketFailure(NumericalError):
    pass


class NonMonotone(NumericalError):
    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points


class SingularSystem(NumericalError):
    pass


class MaxIterExceeded(NumericalError):
    pass
