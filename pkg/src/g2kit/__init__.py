"""Numerical toolkit for closed G2-structures with T^3-symmetry."""

from .alg_point import KForm, hodge, wedge
from .exceptions import G2KitError
from .fieldcalc import Domain, FormField, InvariantForm
from .g2_point import PHI_O, metric_from_3form, point_reduce, reconstruct
from .hsym4 import HSTriple, classify_triple
from .models import build as build_model
from .moments import build_moment_chart, singular_image, vanishing_orders
from .reduction import change_generators, classify_action, leaf_triples, quotient_triple

__version__ = "0.1.0"

__all__ = [
    "KForm", "hodge", "wedge", "G2KitError", "Domain", "FormField", "InvariantForm",
    "PHI_O", "metric_from_3form", "point_reduce", "reconstruct", "HSTriple", "classify_triple",
    "build_model", "build_moment_chart", "singular_image", "vanishing_orders",
    "change_generators", "classify_action", "leaf_triples", "quotient_triple",
]
