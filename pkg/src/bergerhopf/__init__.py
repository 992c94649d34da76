"""Second-variation analysis of Hopf vector fields on Berger spheres.

Verifies the closed-form Hessians of the energy, volume and generalized
energy functionals at Hopf fields against independent numerical oracles,
and classifies stability over the (mu, lambda) parameter plane.
"""

__version__ = "0.1.0"

from .geometry import BergerContext
from .polynomials import PolyField

__all__ = ["BergerContext", "PolyField", "__version__"]
