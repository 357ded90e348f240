"""Inference for linear regression with dyadic (pair-indexed) data."""

from dyadreg.estimator import (
    DyadDataset,
    DyadicRobustOLS,
    OlsFit,
    PsdPolicy,
    RobustVariance,
    meat,
    ols_fit,
    psd_correct,
    sandwich,
)
from dyadreg.graph import (
    DyadGraph,
    GraphDiagnostics,
    build_graph,
    diagnostics,
    janson_ratio,
    neighbor_dyads,
    overlaps,
)
from dyadreg.inference import InferenceResult, confidence_interval, t_stat

__version__ = "0.1.0"

__all__ = [
    "DyadDataset",
    "DyadGraph",
    "DyadicRobustOLS",
    "GraphDiagnostics",
    "InferenceResult",
    "OlsFit",
    "PsdPolicy",
    "RobustVariance",
    "build_graph",
    "confidence_interval",
    "diagnostics",
    "janson_ratio",
    "meat",
    "neighbor_dyads",
    "ols_fit",
    "overlaps",
    "psd_correct",
    "sandwich",
    "t_stat",
]
