"""Exception types shared across the package."""


class NonMarkovError(Exception):
    """Base class for all package-specific errors."""


class DegenerateCoupling(NonMarkovError):
    """Raised when g = 0 (closed-form eigenvectors divide by g) or g = detuning = 0."""


class EmptyTimes(NonMarkovError):
    """Raised when an evolution is requested on an empty time grid."""


class StepTooLarge(NonMarkovError):
    """Raised when an integrator step exceeds its stability/accuracy bound."""


class NonPhysical(NonMarkovError):
    """Raised when a state lies outside the physical region (e.g. |v| > 1)."""


class GridMismatch(NonMarkovError):
    """Raised when two series/trajectories do not share the same time grid."""


class TooShort(NonMarkovError):
    """Raised when a series has too few points for the requested operation."""


class NoOscillations(NonMarkovError):
    """Raised when no rise of sufficient amplitude is detected in a series."""


class TruncationOverflow(NonMarkovError):
    """Raised when population leaks into the top Fock levels of a truncated ladder."""


class NoPlateau(NonMarkovError):
    """Raised when no qualifying flat run exists in a smoothing-degree sweep."""


class ConfigError(NonMarkovError):
    """Raised on invalid or malformed run configuration / input files."""
