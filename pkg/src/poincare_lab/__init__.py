"""Numerical laboratory for weighted Poincaré-Sobolev inequalities on boxes and flat tori."""

from poincare_lab.grid import (
    Density,
    Grid,
    ScalarField,
    VectorField,
    field_from_function,
    make_grid,
    read_field_csv,
    write_field_csv,
)
from poincare_lab.calculus import (
    gradient,
    gradient_lp_norm,
    integral,
    lp_norm,
    mean,
    normalize_density,
    point_mass,
    quadrature_weights,
    weighted_mean,
)
from poincare_lab.inequality import (
    ExponentConfig,
    HypothesisError,
    Lemma1Report,
    deficit,
    interpolation_theta,
    lemma1_check,
    ratio,
    ratio_report,
    sobolev_conjugate,
    validate_exponents,
)

__version__ = "0.1.0"

__all__ = [
    "Density",
    "ExponentConfig",
    "Grid",
    "HypothesisError",
    "Lemma1Report",
    "ScalarField",
    "VectorField",
    "deficit",
    "field_from_function",
    "gradient",
    "gradient_lp_norm",
    "integral",
    "interpolation_theta",
    "lemma1_check",
    "lp_norm",
    "make_grid",
    "mean",
    "normalize_density",
    "point_mass",
    "quadrature_weights",
    "ratio",
    "ratio_report",
    "read_field_csv",
    "sobolev_conjugate",
    "validate_exponents",
    "weighted_mean",
    "write_field_csv",
]
