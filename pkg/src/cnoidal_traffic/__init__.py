"""Periodic KdV travelling waves in the optimal-velocity traffic model on a ring.

Submodules
----------
elliptic
    Complete elliptic integrals and Jacobi functions parametrised by the modulus.
cnoidal
    Cnoidal solutions of the perturbed KdV equation and their solvability condition.
ov_model
    The optimal-velocity car-following model in headway form.
steady
    The family of steady waves on the ring and its inversion ``sensitivity -> m``.
simulate
    Adaptive integration of the ring and comparison with the asymptotic wave.
cli
    Command-line front end.
"""
from .cnoidal import *  # noqa: F401,F403
from .elliptic import *  # noqa: F401,F403
from .errors import (  # noqa: F401
    DegenerateError,
    DomainError,
    IntegratorError,
    NoSolutionError,
    PrecisionLimitError,
    PrecisionWarning,
    SingularityError,
    WindowTooShortError,
)
from .ov_model import *  # noqa: F401,F403
from .simulate import *  # noqa: F401,F403
from .steady import *  # noqa: F401,F403
from ._kernels import BACKEND  # noqa: F401

__version__ = "0.1.0"
