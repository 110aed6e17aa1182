"""Loss functions and the binary-accuracy training metric.

Mean squared error averages over every scalar prediction entry (windows times
devices), so its scale does not depend on the number of devices. The log-cosh
loss is an unreduced sum over entries and uses the overflow-safe identity
``log(cosh(d)) = |d| + log1p(exp(-2|d|)) - log(2)``.
"""

from __future__ import annotations

import numpy as np

from fastgrant._validation import check_same_shape

LOSSES = ("mse", "logcosh")


def loss_mse(pred: np.ndarray, labels: np.ndarray) -> float:
    """Sum of squared residuals divided by the number of scalar entries."""
    pred, labels = np.asarray(pred, dtype=np.float64), np.asarray(labels, dtype=np.float64)
    check_same_shape(pred, labels, "pred", "labels")
    diff = pred - labels
    return float(np.sum(diff * diff) / diff.size)


def loss_mse_grad(pred: np.ndarray, labels: np.ndarray) -> np.ndarray:
    check_same_shape(np.asarray(pred), np.asarray(labels), "pred", "labels")
    return 2.0 * (pred - labels) / pred.size


def loss_logcosh(pred: np.ndarray, labels: np.ndarray) -> float:
    """Unreduced sum of log(cosh(pred - labels)), stable for large residuals."""
    pred, labels = np.asarray(pred, dtype=np.float64), np.asarray(labels, dtype=np.float64)
    check_same_shape(pred, labels, "pred", "labels")
    d = np.abs(pred - labels)
    return float(np.sum(d + np.log1p(np.exp(-2.0 * d)) - np.log(2.0)))


def loss_logcosh_grad(pred: np.ndarray, labels: np.ndarray) -> np.ndarray:
    check_same_shape(np.asarray(pred), np.asarray(labels), "pred", "labels")
    return np.tanh(pred - labels)


def loss_value_and_grad(name: str, pred: np.ndarray, labels: np.ndarray) -> tuple:
    if name == "mse":
        return loss_mse(pred, labels), loss_mse_grad(pred, labels)
    if name == "logcosh":
        return loss_logcosh(pred, labels), loss_logcosh_grad(pred, labels)
    raise ValueError(f"unknown loss {name!r}; expected one of {LOSSES}")


def binary_accuracy(pred: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    """Fraction of entries where thresholded prediction equals the 0/1 label.

    Ties at the threshold classify as 1 (>= convention).
    """
    pred, labels = np.asarray(pred, dtype=np.float64), np.asarray(labels, dtype=np.float64)
    check_same_shape(pred, labels, "pred", "labels")
    return float(np.mean((pred >= threshold) == (labels >= 0.5)))
