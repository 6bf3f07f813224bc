"""Bell (CHSH) violations from pairs of position and momentum projections.

Modules
-------
projpair  finite-dimensional two-projection algebra (the exact oracle)
grid      discretized wavefunctions, masks, quadratic phases, commutator norms
prolate   Nystrom analysis of the time-band limiting operator
chsh      correlation surface, interval and half-line states, CHSH evaluation
halfline  dilation-diagonal representation, Fourier integrals, asymptotics
periodic  periodic sets, square-wave spectrum, commutation jump
cli       command-line front end
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    IntegrationError,
    PosBellError,
    ResolutionError,
    TruncationError,
    ValidationError,
)

__all__ = [
    "ConvergenceError",
    "IntegrationError",
    "PosBellError",
    "ResolutionError",
    "TruncationError",
    "ValidationError",
    "__version__",
]
