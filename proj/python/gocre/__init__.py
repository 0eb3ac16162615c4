"""Generalized orthogonal components regression for high-dimensional GLMs."""

from ._core import (
    DimensionError,
    Model,
    benchmark,
    delta_closed_form,
    delta_full,
    fit,
    irpls_fit,
    rank_features,
    simulate,
    wilcoxon_p,
)

__all__ = [
    "DimensionError",
    "Model",
    "benchmark",
    "delta_closed_form",
    "delta_full",
    "fit",
    "irpls_fit",
    "rank_features",
    "simulate",
    "wilcoxon_p",
]
