"""Quaternionic Dirac operators induced by immersed triangle meshes.

Submodules
----------
quat
    Quaternion algebra on arrays.
mesh
    Triangle meshes, generators and boundary frames.
dirac
    Weak Dirac operator assembly and mean curvature.
boundary
    Local boundary conditions, their certification and degrees.
spectral
    Constrained eigenproblems, kernels, indices, spectral flow.
spin
    Spin transformations, doubling and Dirac spheres.
vekua
    Riemann-Hilbert model problems on the disc.
"""

from . import boundary, dirac, mesh, quat, spectral, spin, vekua
from .errors import QDiracError

__version__ = "0.1.0"

__all__ = ["quat", "mesh", "dirac", "boundary", "spectral", "spin", "vekua",
           "QDiracError", "__version__"]
