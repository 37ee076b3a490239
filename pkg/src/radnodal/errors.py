"""Exception hierarchy.

Numerical failures derive from :class:`SolverError` so the CLI can map them
to exit code 2; problem-definition errors derive from :class:`SpecError`
(exit code 1).
"""


class SpecError(ValueError):
    """Invalid problem definition (exponent window, bad weights, ...)."""


class SolverError(RuntimeError):
    """Base class for numerical failures."""


class ZeroInput(SolverError, ValueError):
    pass


class NoSignChange(SolverError):
    pass


class DegenerateAnnulus(SolverError, ValueError):
    pass


class MaxIterations(SolverError):
    pass


class SignPatternViolation(SolverError, ValueError):
    pass


class CollapseDetected(SolverError):
    pass


class AllBelowThreshold(SolverError, ValueError):
    pass


class StepFailure(SolverError):
    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class BracketInvalid(SolverError, ValueError):
    pass


class NoDecay(SolverError):
    pass
