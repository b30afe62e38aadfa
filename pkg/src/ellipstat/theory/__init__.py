"""Limiting objects: the ellipse, ``m(z)``, the covariance kernels and Faber expansions."""
from .geometry import (ContourSpec, EllipseGeometry, ellipse_distance, joukowski_radius_for_gap,
                       offset_points, semi_axes)
from .stieltjes import stieltjes_m, stieltjes_m_prime
from .kernels import TheoryMoments, beta, upsilon
from .faber import faber_coeffs, faber_eval, faber_table, faber_to_power
from .functions import TestFunction
from .covariance import (DEFAULT_DELTA, DEFAULT_L, DEFAULT_NODES, DEFAULT_R, cov_contour,
                         cov_series, cov_upsilon_form, covariance_matrix, default_contour,
                         series_weights, shcherbina_variance, split_real_condition)

__all__ = [
    "ContourSpec", "EllipseGeometry", "ellipse_distance", "joukowski_radius_for_gap",
    "offset_points", "semi_axes", "stieltjes_m", "stieltjes_m_prime", "TheoryMoments", "beta",
    "upsilon", "faber_coeffs", "faber_eval", "faber_table", "faber_to_power", "TestFunction",
    "cov_contour", "cov_series", "cov_upsilon_form", "covariance_matrix", "default_contour",
    "series_weights", "shcherbina_variance", "split_real_condition",
    "DEFAULT_DELTA", "DEFAULT_L", "DEFAULT_NODES", "DEFAULT_R",
]
