"""Billiard-language complexity for regular polygons, by closed formulas and
by direct enumeration of corner-to-corner trajectories."""

__version__ = "0.1.0"

from .constants import (
    ConstantsReport,
    OmegaPolygon,
    asymptotic_limit_check,
    c_comb_pipeline,
    c_N,
    constants_report,
    cusp_constant,
    cusp_representatives,
    fundamental_identity,
    omega_area_closed,
    omega_polygon,
    trig_sums,
)
from .counting import (
    CountSeries,
    WordSample,
    calibrate_conventions,
    complexity_rho,
    count_diagonals,
    sampled_word_count,
    sc_count_series,
)
from .geometry import CrossingKind, Isometry, PlanarVec, PrecisionConfig, reflect_across_edge, segment_crossing, wedge
from .polygons import (
    NGonParams,
    PolygonSpec,
    SurfaceSpec,
    equilateral_triangle,
    ngon_surface,
    rationality_check,
    regular_ngon,
    unit_square,
)
from .unfolding import (
    CALIBRATED_CONVENTIONS,
    DiagonalConventions,
    GeneralizedDiagonal,
    SaddleConnection,
    coarse_bound_K,
    enumerate_diagonals,
    enumerate_saddle_connections,
    three_lengths,
)

__all__ = [
    "__version__",
    "ConstantsReport",
    "OmegaPolygon",
    "asymptotic_limit_check",
    "c_comb_pipeline",
    "c_N",
    "constants_report",
    "cusp_constant",
    "cusp_representatives",
    "fundamental_identity",
    "omega_area_closed",
    "omega_polygon",
    "trig_sums",
    "CountSeries",
    "WordSample",
    "calibrate_conventions",
    "complexity_rho",
    "count_diagonals",
    "sampled_word_count",
    "sc_count_series",
    "CrossingKind",
    "Isometry",
    "PlanarVec",
    "PrecisionConfig",
    "reflect_across_edge",
    "segment_crossing",
    "wedge",
    "NGonParams",
    "PolygonSpec",
    "SurfaceSpec",
    "equilateral_triangle",
    "ngon_surface",
    "rationality_check",
    "regular_ngon",
    "unit_square",
    "CALIBRATED_CONVENTIONS",
    "DiagonalConventions",
    "GeneralizedDiagonal",
    "SaddleConnection",
    "coarse_bound_K",
    "enumerate_diagonals",
    "enumerate_saddle_connections",
    "three_lengths",
]
