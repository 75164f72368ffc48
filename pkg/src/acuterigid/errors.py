"""Exception hierarchy shared by all modules."""


class AcuteRigidError(Exception):
    """Base class for library errors."""


class MeshError(AcuteRigidError, ValueError):
    """Invalid combinatorics, embedding or file content."""


class NonMetricError(AcuteRigidError, ValueError):
    """A face violates the triangle inequality."""

    def __init__(self, message, faces=()):
        super().__init__(message)
        self.faces = tuple(int(f) for f in faces)


class PreconditionError(AcuteRigidError, ValueError):
    """Inputs do not satisfy an operation's stated precondition."""


class SolverError(AcuteRigidError, RuntimeError):
    """A linear or nonlinear solve failed."""


class SingularSystemError(SolverError):
    """Interior component with no boundary contact."""


class BudgetExceededError(AcuteRigidError, RuntimeError):
    """An enumeration or rejection-sampling budget ran out."""
