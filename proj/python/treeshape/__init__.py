"""Elastic shape analysis of tree-like 3D curves."""

from ._core import (
    DataError,
    Geodesic,
    MatchOptions,
    MetricWeights,
    NumericalError,
    Registration,
    ShapeModel,
    Tree,
    distance,
    fit_pca,
    geodesic,
    karcher_mean,
    load,
    max_point_distance,
    normalize,
    parse_swc,
    reflect,
    register,
    rotate,
    save,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Geodesic",
    "MatchOptions",
    "MetricWeights",
    "NumericalError",
    "Registration",
    "ShapeModel",
    "Tree",
    "distance",
    "fit_pca",
    "geodesic",
    "karcher_mean",
    "load",
    "max_point_distance",
    "normalize",
    "parse_swc",
    "reflect",
    "register",
    "rotate",
    "save",
    "symmetrize",
]
