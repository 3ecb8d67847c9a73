"""Exception and warning types shared across the package."""


class SpafdaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SpafdaError, ValueError):
    """Input data violates a precondition (non-finite values, bad shapes, ...)."""


class ConfigurationError(SpafdaError, ValueError):
    """Tuning parameters are inconsistent with the data or with each other."""


class ParseError(SpafdaError, ValueError):
    """A CSV or config file could not be parsed; message carries the location."""


class MomentFitError(SpafdaError, ValueError):
    """Requested moment targets are outside the feasible region of the family."""


class DiagnosticWarning(UserWarning):
    """Non-fatal numerical diagnostics (near-ties, floored variances, caps)."""
