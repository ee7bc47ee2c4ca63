"""Exception types shared across the package."""


class FracbdError(Exception):
    """Base class for all errors raised by fracbd."""


class NonConvergenceError(FracbdError):
    """A series, quadrature, or iteration hit its budget before reaching tolerance."""


class TailMassError(FracbdError):
    """A truncated state distribution left more than ``tail_tol`` beyond the boundary."""


class DegenerateModelError(FracbdError):
    """The requested quantity is undefined for this model (e.g. lambda_0 = 0
    makes the effective-catastrophe denominator 1 - nu*p00(nu) vanish)."""


class RejectionCapError(FracbdError):
    """A rejection sampler exceeded its attempt cap; subdivide the time argument."""


class RefinementError(FracbdError):
    """First-passage bracketing failed to localize the crossing within its budget."""
