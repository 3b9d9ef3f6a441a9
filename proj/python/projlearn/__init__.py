"""Learned forward and inverse projections for multidimensional data."""

from ._core import (
    DataError,
    Dataset,
    Error,
    GradientMap,
    Model,
    ModelFormatError,
    NumericalError,
    UsageError,
    generate_rings,
    gradient_map,
    gradient_map_fn,
    inverse_mse,
    load_csv,
    load_idx,
    parametric_mse,
    reconstruction_mse,
    run_cli,
    split,
    train,
    tsne,
)

__all__ = [
    "DataError",
    "Dataset",
    "Error",
    "GradientMap",
    "Model",
    "ModelFormatError",
    "NumericalError",
    "UsageError",
    "generate_rings",
    "gradient_map",
    "gradient_map_fn",
    "inverse_mse",
    "load_csv",
    "load_idx",
    "parametric_mse",
    "reconstruction_mse",
    "run_cli",
    "split",
    "train",
    "tsne",
]
