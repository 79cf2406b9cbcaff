"""Exception hierarchy shared by every module of the package."""


class GreedoidSecretaryError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GreedoidSecretaryError, ValueError):
    """An argument lies outside the domain of the operation."""


class StructuralError(GreedoidSecretaryError):
    """The structure does not have the shape an operation requires."""


class SizeLimitError(GreedoidSecretaryError):
    """An exhaustive computation was requested on a ground set that is too large."""
