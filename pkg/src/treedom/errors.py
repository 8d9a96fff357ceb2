"""Exception types shared across the package."""


class TreedomError(Exception):
    """Base class for all package errors."""


class ContractError(TreedomError, ValueError):
    """An input violates the precondition of an operation."""


class SizeError(TreedomError):
    """A computation would exceed a configured size cap."""


class InsufficientDataError(TreedomError):
    """A finite table does not reach the index a computation needs."""
