"""Exception types shared across the package."""


class SiltError(Exception):
    """Base class for all package-specific errors."""


class RegimeError(SiltError):
    """Operation invoked outside its (H, d) regime of validity."""


class DivergenceError(SiltError):
    """The requested integral diverges for these parameters."""


class QuadratureError(SiltError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class RationalHurstRequired(SiltError):
    """A float H is too close to a regime boundary; pass H as p/q."""


class EpsilonGuardError(SiltError):
    """The kernel bandwidth eps does not resolve the grid (eps < dt^{2H})."""
