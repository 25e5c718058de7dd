"""Numerics for Toeplitz operators on weighted Bergman spaces.

Geometry of the classical bounded symmetric domains, weighted quadrature,
truncated Bergman bases, Toeplitz assembly, Berezin transforms, boundary
limit-operator approximation, essential-spectrum estimation and band
structure diagnostics, plus a batch CLI.
"""

__version__ = "0.1.0"

from .domains import (DomainSpec, unit_disk, unit_ball, matrix_ball, from_name,
                      polar_diagonal, polar_radius, jordan_det,
                      jordan_det_power, geodesic_symmetry, bergman_distance,
                      check_admissible)
from .quadrature import (WeightContext, QuadratureRule, make_context,
                         normalization_constant, build_rule, rule_for,
                         integrate)

__all__ = [
    "DomainSpec", "unit_disk", "unit_ball", "matrix_ball", "from_name",
    "polar_diagonal", "polar_radius", "jordan_det", "jordan_det_power",
    "geodesic_symmetry", "bergman_distance", "check_admissible",
    "WeightContext", "QuadratureRule", "make_context",
    "normalization_constant", "build_rule", "rule_for", "integrate",
    "__version__",
]
