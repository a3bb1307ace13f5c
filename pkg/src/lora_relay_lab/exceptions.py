"""Package-level exception types."""


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or violates an invariant."""


class ConvergenceError(RuntimeError):
    """Raised when an adaptive quadrature fails to reach its tolerance."""
