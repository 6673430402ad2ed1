"""Two-layer quasi-geostrophic vortex patches.

Special functions, coupled interaction kernels, the exact spectrum of the
linearized boundary operator around disc pairs, Newton continuation of
m-fold rotating V-states, and Lagrangian contour evolution.
"""

from .kernels import LayerParams

__all__ = ["LayerParams"]
__version__ = "0.1.0"
