"""Numerical laboratory for zero-temperature limits of twisted log-Hessian
flows on the flat torus: convex/psh envelopes, Hamilton-Jacobi shocks,
Voronoi/Delaunay tessellations and Hele-Shaw growth."""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
