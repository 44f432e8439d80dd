"""Exception hierarchy.

Every error carries the process exit code the command line front end uses
for it, plus a ``details`` mapping that is emitted verbatim in error JSON.
"""


class ShiftCoverError(Exception):
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        out.update(self.details)
        return out


class ValidationError(ShiftCoverError, ValueError):
    exit_code = 2


class DomainError(ValidationError):
    """A point lies outside the interval an object was built for."""


class InvalidStart(ValidationError):
    """Start index violates the covering precondition on its first term."""


class NotApplicable(ShiftCoverError):
    exit_code = 3


class MissingTailBound(NotApplicable):
    pass


class InfeasibleError(ShiftCoverError):
    exit_code = 4


class HorizonExceeded(InfeasibleError, IndexError):
    """An index beyond the declared horizon was requested."""


class InsufficientHorizon(InfeasibleError):
    """The horizon ends before a construction can complete."""


class MagnitudeOverflow(InfeasibleError, OverflowError):
    pass


class StageInfeasible(InfeasibleError):
    pass


class ConstructionInvariantViolated(ShiftCoverError):
    exit_code = 1


class InvariantViolated(ShiftCoverError):
    exit_code = 1
