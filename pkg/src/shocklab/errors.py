"""Exception types shared across the package."""


class ShocklabError(Exception):
    """Base class for package errors."""


class ContractError(ShocklabError):
    """A documented precondition or invariant was violated by the caller."""


class CapacityError(ShocklabError):
    """Requested window is too large to materialize as an event tape."""


class TruncationError(ShocklabError):
    """A particle reached the guarded right margin of its window.

    The simulation window was too small for this realization; results up to
    the failure are discarded by callers rather than silently biased.
    """
