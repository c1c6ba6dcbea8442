"""Lower bounds for the spectral threshold of curved tubes, checked numerically."""
from .cross_section import CrossSection, CrossSectionError, mu0
from .curve import CurveSpec, GeometryError, PiecewisePolynomial
from .spectral import EigenResult, EigenSolverError, lowest_eigenpairs
from .torus import lambda0, lambda0_potential, lambda0_weighted
from .tube import TubeProblem, threshold
from .verification import BoundReport, faber_krahn_constant, verify_theorem1

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "CrossSection", "CrossSectionError", "CurveSpec", "EigenResult",
    "EigenSolverError", "GeometryError", "PiecewisePolynomial", "TubeProblem",
    "faber_krahn_constant", "lambda0", "lambda0_potential", "lambda0_weighted",
    "lowest_eigenpairs", "mu0", "threshold", "verify_theorem1",
]
