"""Exception types shared across the package.

Argument/precondition violations raise plain ``ValueError``; the classes
here mark failures that can occur at runtime on valid inputs and that
callers may want to catch individually.
"""


class DiscoveryError(Exception):
    """Base class for runtime failures of the discovery pipeline."""


class SolverDivergedError(DiscoveryError):
    """A PDE solve produced non-finite values."""


class LinearSolveError(DiscoveryError):
    """A linear system inside a solver could not be solved."""


class DegenerateTermError(DiscoveryError):
    """A feature vector has a zero (or non-finite) time frame and cannot
    be frame-normalized."""


class PoolExhaustedError(DiscoveryError):
    """Random term generation could not produce enough distinct, viable
    terms from the factor pool."""


class RankDeficientError(DiscoveryError):
    """The final least-squares system for coefficient recovery is rank
    deficient."""


class SingularSystemError(DiscoveryError):
    """Ridge normal equations are singular (alpha = 0 on a degenerate
    Gram matrix)."""
