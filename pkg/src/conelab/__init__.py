"""conelab: light-cone locality checks for relativistic field dynamics.

Submodules: lattice (grids/regions/cones), waves (leapfrog wave and
Klein-Gordon dynamics), dirac (split-step and spectral Dirac), audit
(twin runs, frustum energies, non-separability), sqrtkg (first-order
square-root evolution and leakage), gaussian (harmonic-lattice states),
localization (two-point quadratures, regional Fock states, NW probe),
experiments/config/cli (the scenario runner).
"""

__version__ = "0.1.0"

from .lattice import (ConeSlice, Field, GridSpec, Region, cone_slice,
                      discrete_integral, region_mask)

__all__ = [
    "ConeSlice", "Field", "GridSpec", "Region", "cone_slice",
    "discrete_integral", "region_mask", "__version__",
]
