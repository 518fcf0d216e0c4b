"""srcurv: curvature, Bochner identities, and heat-semigroup checks for
rank-two sub-Riemannian frames."""

__version__ = "0.1.0"

from . import bochner, calculus, cdconstants, connection, curvature, geodesics
from . import jets, models, polynomials, srsio, structure

__all__ = [
    "__version__",
    "bochner", "calculus", "cdconstants", "connection", "curvature",
    "geodesics", "jets", "models", "polynomials", "srsio", "structure",
]
