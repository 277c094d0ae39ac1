"""Exception hierarchy. CLI exit codes map onto these classes."""


class BandmaskError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(BandmaskError):
    """Bad input data, config, or arguments (CLI exit code 2)."""


class ProtocolError(BandmaskError):
    """Observer wire-protocol violation or timeout (CLI exit code 4)."""


class FitError(BandmaskError):
    """Curve fit failed to converge; carries the best point found so far."""

    def __init__(self, message, best_params=None, best_rss=None):
        super().__init__(message)
        self.best_params = best_params
        self.best_rss = best_rss
