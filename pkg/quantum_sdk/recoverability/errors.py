"""Exception hierarchy shared by every recoverability module."""


class RecoverabilityError(Exception):
    """Base class for all errors raised by the toolkit."""


class StructuralError(RecoverabilityError, ValueError):
    """Shapes or dimensions do not fit together, or entries are not finite."""


class DomainError(RecoverabilityError, ValueError):
    """A parameter or operator lies outside the domain of the operation."""


class SupportError(RecoverabilityError):
    """An operator leaves the support required by the operation."""


class DegenerateInputError(RecoverabilityError):
    """The input is (numerically) zero where a nonzero element is needed."""


class ConvergenceError(RecoverabilityError):
    """An iterative construction did not settle within its iteration budget."""


class PreconditionError(RecoverabilityError):
    """A hypothesis of the construction is not satisfied by the input."""


class DecompositionError(RecoverabilityError):
    """The block factorization could not be found or failed its checks."""
