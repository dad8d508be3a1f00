"""Exception types shared across the package."""


class ToralLabError(Exception):
    """Base class for all package errors."""


class FactorizationFailed(ToralLabError):
    """Numeric-assisted factorization could not be certified at the precision cap."""


class PrecisionExhausted(ToralLabError):
    """Requested root accuracy unreachable at the hard precision cap."""


class AmbiguousModuli(ToralLabError):
    """Two eigenvalue moduli are too close to group and cannot be certified equal or distinct."""


class NotInGLdZ(ToralLabError):
    """Matrix determinant is not +-1."""


class NotContracting(ToralLabError):
    """Coefficient bound for the fixed-point inversion scheme fails."""


class NoConvergence(ToralLabError):
    """Fixed-point iteration hit its cap or stopped contracting."""


class GridTooCoarse(ToralLabError):
    """Spectral interpolation residual exceeds the requested tolerance."""


class NotDiffeo(ToralLabError):
    """Displacement coefficient bound does not certify a diffeomorphism."""


class Diverging(ToralLabError):
    """Low-frequency increments of the center series grow instead of decaying."""


class OrthogonalMode(ToralLabError):
    """A supported frequency is orthogonal to every basis vector of the decomposition."""


class NotErgodic(ToralLabError):
    """Matrix has a root-of-unity eigenvalue; mixing estimates do not apply."""


class SignalBelowTail(ToralLabError):
    """Correlation signal is drowned by the truncation tail bound."""


class ConfigInvalid(ToralLabError):
    """Run configuration failed validation."""
