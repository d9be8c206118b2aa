"""symode: recover the structure of first-order ODEs from sampled trajectories.

The pipeline treats an equation dx/dt = f(t, x) as a surface in (t, x, xdot)
jet space, assembles the linear system that a one-parameter symmetry of that
surface must satisfy, denoises the system's rank with nuclear-norm
minimisation, and reads the symmetry generator out of the null space.
"""

__version__ = "0.1.0"

from .basis import BasisSpec, MultiIndex, PoleError, enumerate_basis
from .jetspace import JetSample, Trajectory
from .sparseopt import DenoiseConfig
from .symmetry import SymmetryResult, detect
from .synth import RhsSpec, integrate_rk4

__all__ = [
    "BasisSpec",
    "MultiIndex",
    "PoleError",
    "enumerate_basis",
    "JetSample",
    "Trajectory",
    "DenoiseConfig",
    "SymmetryResult",
    "detect",
    "RhsSpec",
    "integrate_rk4",
]
