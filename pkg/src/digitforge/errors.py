"""Exception hierarchy.

Domain errors (bad digits, endpoints, null conditioning) map to CLI exit
code 2; resource errors (depth caps, block budgets, infeasible exact
enumeration) map to exit code 3.
"""


class DigitForgeError(Exception):
    """Base class for all package errors."""


class DomainError(DigitForgeError, ValueError):
    pass


class UnknownDigitError(DomainError):
    pass


class EndpointError(DomainError):
    """The point lies on a subdivision endpoint (a Lebesgue null set)."""


class EmptyCellError(DomainError):
    pass


class ConditioningOnNullError(DomainError):
    pass


class UndefinedConditionalError(DomainError):
    pass


class UnsupportedDepthError(DomainError):
    pass


class UnsupportedSchemeError(DomainError):
    pass


class NoUniqueInvariantError(DomainError):
    pass


class InvalidParameterError(DomainError):
    pass


class ModeMismatchError(DomainError):
    pass


class SupportMismatchError(DomainError):
    pass


class EmptySampleError(DomainError):
    pass


class ResourceError(DigitForgeError, RuntimeError):
    pass


class DepthCapError(ResourceError):
    pass


class BudgetExceededError(ResourceError):
    pass


class InfeasibleExactError(ResourceError):
    pass
