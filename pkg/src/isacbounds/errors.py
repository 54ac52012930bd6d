"""Exception hierarchy shared across the toolkit."""


class BoundsError(ValueError):
    """Base class for all domain errors raised by this package."""


class DegenerateConstellationError(BoundsError):
    """A constellation point has zero modulus, so the SNR penalty diverges."""


class InsufficientResourcesError(BoundsError):
    """Fewer than two sensing subcarriers/symbols or receive antennas."""


class SingularGeometryError(BoundsError):
    """Target coincides with a node or a Jacobian denominator vanishes."""


class OutOfFieldError(SingularGeometryError):
    """Target direction outside the array field of view (|DoA| >= pi/2)."""


class InvalidBistaticRangeError(BoundsError):
    """Bistatic range not larger than the baseline."""


class NuisanceBlockSingularError(BoundsError):
    """Nuisance block of a Fisher matrix is not invertible."""


class NoInformationError(BoundsError):
    """No link contributes information about the target."""


class UndefinedHeadingError(BoundsError):
    """Velocity magnitude is zero, so the heading is undefined."""


class NoFeasibleSubsetError(BoundsError):
    """Every candidate subset yields a singular information matrix."""


class ScenarioFormatError(BoundsError):
    """Scenario document violates the schema; message carries the location."""


class OracleDomainError(BoundsError):
    """Numerical differentiation hit a non-finite function value."""
