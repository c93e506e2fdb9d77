"""Entropy-stable nodal DG spectral element solver for resistive GLM-MHD.

Curvilinear, fully periodic hexahedral meshes; split-form flux differencing
with entropy-conservative two-point fluxes; BR1 viscous coupling; hyperbolic
divergence cleaning with entropy-consistent non-conservative terms.
"""

from mhdsem.operators import Operator1D
from mhdsem.physics import PhysParams, PositivityError

__all__ = ["Operator1D", "PhysParams", "PositivityError"]

__version__ = "0.1.0"
