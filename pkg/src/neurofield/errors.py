"""Exception types shared across the package."""


class NeurofieldError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(NeurofieldError, ValueError):
    """A numeric parameter is out of its admissible range."""


class DimensionError(NeurofieldError, ValueError):
    """Array shapes or population dimensions do not line up."""


class ConfigError(NeurofieldError, ValueError):
    """A scenario configuration is malformed or violates a restriction."""


class HistoryRangeError(NeurofieldError, RuntimeError):
    """A history query fell outside the stored sample range."""


class IntegrationError(NeurofieldError, RuntimeError):
    """Time integration aborted (non-finite state or inconsistent setup).

    Carries a diagnostic snapshot of the last valid state so the caller
    can dump it for post-mortem inspection.
    """

    def __init__(self, message, t=None, snapshot=None):
        super().__init__(message)
        self.t = t
        self.snapshot = snapshot


class FixedPointError(NeurofieldError, RuntimeError):
    """A fixed-point solve failed (non-contractive map or iteration cap)."""
