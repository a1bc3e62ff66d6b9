"""Exception hierarchy shared by all dickesim modules."""


class DickesimError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(DickesimError, ValueError):
    """A constructor or operation received arguments outside its domain."""


class CapacityError(InvalidParameterError):
    """Requested system size exceeds a hard capacity limit (full-space ops)."""


class DegenerateInputError(InvalidParameterError):
    """Input state is annihilated by the requested operation."""


class ConfigurationError(DickesimError):
    """A mode grid or engine configuration failed its calibration checks."""

    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class IntegrationError(DickesimError):
    """Numerical integration violated its conservation tolerance."""


class FitFailureError(DickesimError):
    """A rate fit could not be performed on the supplied trajectory."""


class ScenarioParseError(DickesimError):
    """Scenario config file could not be parsed (syntax / missing section)."""


class ScenarioValidationError(DickesimError):
    """Scenario config parsed but contains invalid or unresolvable fields."""


class AcceptanceViolation(DickesimError):
    """An engine cross-check exceeded its declared tolerance."""
