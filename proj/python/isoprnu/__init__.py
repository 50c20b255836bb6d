"""Python access to the isoprnu library. Images are 2-D float64 arrays in [0, 1]."""

from ._isoprnu import (
    CorrelationMap,
    IsoprnuError,
    Predictor,
    block_features,
    block_stats,
    corr_map,
    detect,
    develop,
    fingerprint,
    fit_quadratic,
    flat_scene,
    gain_slope,
    infer_iso,
    make_forgery,
    natural_scene,
    pixel_metrics,
    prnu_field,
    residual,
    simulate,
    train_predictor,
)

__all__ = [
    "CorrelationMap",
    "IsoprnuError",
    "Predictor",
    "block_features",
    "block_stats",
    "corr_map",
    "detect",
    "develop",
    "fingerprint",
    "fit_quadratic",
    "flat_scene",
    "gain_slope",
    "infer_iso",
    "make_forgery",
    "natural_scene",
    "pixel_metrics",
    "prnu_field",
    "residual",
    "simulate",
    "train_predictor",
]
