"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration or construction parameters."""


class NoGapSolutionError(RuntimeError):
    """Coupling below the discrete-grid threshold: the gap equation has no root."""


class IntegrationError(RuntimeError):
    """Time integration failed; carries the time of failure when known."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class BlowupError(IntegrationError):
    """Non-finite derivative encountered; carries the offending mode index."""

    def __init__(self, message, t=None, mode=None):
        super().__init__(message, t=t)
        self.mode = mode


class StepUnderflowError(IntegrationError):
    """Adaptive step size fell below the minimum allowed."""
