"""Exception hierarchy shared by every module."""


class QuantoError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(QuantoError, ValueError):
    """An input violates a documented precondition or type invariant."""


class NoSolutionError(DomainError):
    """An inversion has no solution for the given target (e.g. outside a no-arbitrage band)."""


class ConvergenceError(QuantoError, RuntimeError):
    """A numerical search failed to bracket or converge."""
