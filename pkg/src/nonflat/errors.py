"""Exception types shared across the package.

Every error raised intentionally by this package derives from NonflatError,
so callers can catch one base class at CLI boundaries.
"""


class NonflatError(Exception):
    """Base class for all package-specific errors."""


class RangeError(NonflatError):
    """An argument lies outside the domain where a map is defined."""


class MonotonicityError(NonflatError):
    """A function expected to be strictly monotone is not, so it cannot be inverted."""


class DomainError(NonflatError):
    """A curve or profile was evaluated outside its declared validity window."""


class DegenerateError(NonflatError):
    """Two frequency parameters coincide, so the combined phase collapses."""


class PreconditionError(NonflatError):
    """Input parameters violate a documented precondition of the routine."""


class NotStationaryError(NonflatError):
    """The supplied point is not a critical point of the phase."""


class NoStationaryPointError(NonflatError):
    """The phase has no critical point inside the amplitude support."""


class RegimeMismatchError(NonflatError):
    """The requested scale pair belongs to the other operating regime."""


class FrameError(NonflatError):
    """The synthesis frame is too ill-conditioned to invert reliably."""


class AliasingError(NonflatError):
    """The sample grid is too coarse for the occupied frequency band."""


class InsufficientSamplesError(NonflatError):
    """Fewer samples were supplied than the transform needs."""


class InsufficientPointsError(NonflatError):
    """A regression was requested on fewer points than the fit requires."""


class MixedDerivativeError(NonflatError):
    """The mixed second derivative of the phase is too small for the kernel bound."""


class ConfigError(NonflatError):
    """An experiment configuration file is malformed or inconsistent."""
