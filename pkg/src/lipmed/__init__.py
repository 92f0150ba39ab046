"""Minimum-error discrimination of linearly independent pure states.

The optimal measurement is found from the Gram matrix ``G`` alone by solving
``X^2 = D G D`` for the positive definite ``X`` (``D^2`` = diagonal of ``X``),
either by Newton's method or by Taylor continuation from a nearby ``G0`` whose
solution is known. A barrier-method SDP on the dual problem serves as an
independent baseline, and :mod:`lipmed.certify` checks optimality of any
orthonormal measurement.
"""

from .certify import Certificate, certify_solution, reconstruct_povm
from .ensemble import Ensemble, Povm, gram, load, pgm, random_ensemble, save
from .errors import MEDError
from .newton import NewtonOptions, solve_newton
from .sdp import BarrierOptions, solve_sdp
from .stationarity import Solution
from .taylor import TaylorOptions, solve_taylor

__all__ = [
    "BarrierOptions",
    "Certificate",
    "Ensemble",
    "MEDError",
    "NewtonOptions",
    "Povm",
    "Solution",
    "TaylorOptions",
    "certify_solution",
    "gram",
    "load",
    "pgm",
    "random_ensemble",
    "reconstruct_povm",
    "save",
    "solve_newton",
    "solve_sdp",
    "solve_taylor",
]

__version__ = "0.1.0"
