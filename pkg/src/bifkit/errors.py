"""Exception types shared across the toolkit."""


class BifkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(BifkitError, ValueError):
    """Malformed user input: dimension/arity mismatches, bad indices."""


class EvaluationError(BifkitError):
    """Vector field or derivative evaluation produced non-finite values."""


class DegeneracyError(BifkitError):
    """An eigenvalue or normal-form nondegeneracy assumption failed."""


class NotFoundError(BifkitError):
    """No eigenvalue / object near the requested target."""


class RankError(BifkitError):
    """A bordered matrix is numerically singular (rank deficiency > 1 or bad borders)."""


class SolvabilityError(BifkitError):
    """A Fredholm projection left a residual above tolerance."""


class TransversalityError(BifkitError):
    """The parameter family is not transversal to the bifurcation manifold."""


class NoConvergenceError(BifkitError):
    """Newton/Moore-Penrose corrector failed to converge.

    Carries the residual of the first Newton step so sweep experiments can
    record it even for divergent predictions.
    """

    def __init__(self, message, first_residual=None):
        super().__init__(message)
        self.first_residual = first_residual


class StallError(BifkitError):
    """Continuation step size underflowed below the minimum."""


class LocationError(BifkitError):
    """Event locator failed to converge onto a test-function zero."""


class ModelSingularityError(BifkitError):
    """The model right-hand side is singular at the requested point."""
