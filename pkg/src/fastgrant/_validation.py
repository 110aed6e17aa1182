"""Input validation helpers used by the estimator-facing API."""

from __future__ import annotations

import numpy as np

from fastgrant.errors import ShapeError


def check_array(x, name: str, ndim: int, dtype=np.float64) -> np.ndarray:
    """Coerce to a contiguous array of the given rank, or raise ShapeError."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeError(f"{name} must be non-empty")
    return np.ascontiguousarray(arr)


def check_binary(x, name: str, ndim: int) -> np.ndarray:
    """Like check_array but additionally require every entry to be 0 or 1."""
    arr = check_array(x, name, ndim)
    if not np.isin(arr, (0.0, 1.0)).all():
        raise ShapeError(f"{name} must contain only 0/1 entries")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, name_a: str, name_b: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{name_a} shape {a.shape} does not match {name_b} shape {b.shape}")


def check_probability(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p
