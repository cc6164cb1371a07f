"""Numerical lab for the discrete Gaussian free field and the Brownian bridge."""

from .domain import LatticeDomain, PointSet, build_disk, build_square, build_wedge, make_points, subdomain_ball
from .laplace import BoundaryData, DirichletOperator, assemble, conformal_radius, green_column, harmonic_extension
from .sampler import GffSampler, MollifierSpec, ScalarField, circle_average, harmonic_average, mollified_value, pair

__all__ = [
    "LatticeDomain", "PointSet", "build_disk", "build_square", "build_wedge", "make_points", "subdomain_ball",
    "BoundaryData", "DirichletOperator", "assemble", "conformal_radius", "green_column", "harmonic_extension",
    "GffSampler", "MollifierSpec", "ScalarField", "circle_average", "harmonic_average", "mollified_value", "pair",
]
