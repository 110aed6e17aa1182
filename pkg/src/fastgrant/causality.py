"""Directed-information causal discovery and rule-based next-slot prediction.

The estimator is a plug-in over k-step binary contexts with add-1/2 smoothing:
DI(x -> y) here is the average information the source's previous k steps carry
about the next target value beyond the target's own previous k steps, in bits
per step. Strictly-past contexts keep the measure causal.

Graph inference keeps ordered pairs whose DI clears a threshold, then prunes
edges whose information is explained by a stronger parent of the same target
(conditional DI given that parent's context below the threshold); without the
pruning step, chains like source -> relay -> sink also report the indirect
source -> sink pair.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from fastgrant._validation import check_binary
from fastgrant.errors import InsufficientDataError, ShapeError
from fastgrant.traffic import TransmissionRecord


@dataclass
class DiEstimate:
    """Directed information estimate between two devices, in bits/step."""

    source: str
    target: str
    value: float
    order: int


@dataclass
class CausalEdge:
    source: str
    target: str
    lag: int
    strength: float  # DI in bits/step
    trigger_prob: float  # empirical P(target fires | source fired `lag` steps earlier)


@dataclass
class CausalGraph:
    edges: list = field(default_factory=list)
    device_ids: tuple = ()

    @property
    def max_lag(self) -> int:
        return max((e.lag for e in self.edges), default=0)

    def parents(self, target: str) -> list:
        return [e for e in self.edges if e.target == target]

    def to_dict(self) -> dict:
        return {
            "device_ids": list(self.device_ids),
            "edges": [
                {"source": e.source, "target": e.target, "lag": e.lag,
                 "strength": e.strength, "trigger_prob": e.trigger_prob}
                for e in self.edges
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "CausalGraph":
        return cls(
            edges=[CausalEdge(**e) for e in payload["edges"]],
            device_ids=tuple(payload.get("device_ids", ())),
        )


def _context_codes(series: np.ndarray, k: int) -> np.ndarray:
    """Integer code of the k previous values at each step t >= k (most recent
    step in the lowest bit)."""
    windows = np.lib.stride_tricks.sliding_window_view(series, k)[:-1]
    powers = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return windows.astype(np.int64) @ powers


def _required_length(k: int) -> int:
    return 10 * 4**k


def _as_series(x, name: str) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ShapeError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.int64)


def _plugin_di(codes: list, target: np.ndarray) -> float:
    """Plug-in conditional mutual information I(first code; target | rest),
    add-1/2 smoothed, in bits: the first entry of ``codes`` is the source
    context, the remaining entries are conditioning contexts."""
    src = codes[0]
    cond = codes[1:]
    widths = [int(c.max()) + 1 if c.size else 1 for c in codes]
    cond_code = np.zeros_like(src)
    for c, w in zip(cond, widths[1:]):
        cond_code = cond_code * w + c
    n_cond = int(cond_code.max()) + 1
    full = (src * n_cond + cond_code) * 2 + target
    n_src = widths[0]
    counts = np.bincount(full, minlength=n_src * n_cond * 2).reshape(n_src, n_cond, 2)
    counts = counts.astype(np.float64)
    n = counts.sum()

    joint_ctx = counts.sum(axis=2, keepdims=True)            # (src, cond, 1)
    cond_marg = counts.sum(axis=0, keepdims=True)             # (1, cond, 2)
    cond_ctx = cond_marg.sum(axis=2, keepdims=True)           # (1, cond, 1)
    p_full = (counts + 0.5) / (joint_ctx + 1.0)
    p_cond = (cond_marg + 0.5) / (cond_ctx + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(counts > 0, counts * np.log2(p_full / p_cond), 0.0)
    return float(terms.sum() / n)


def directed_information(x, y, order: int = 3, source_id: str = "x", target_id: str = "y") -> DiEstimate:
    """Estimate DI(x -> y) in bits/step from two equal-length binary series."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    x = _as_series(x, "x")
    y = _as_series(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"series lengths differ: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < _required_length(order):
        raise InsufficientDataError(
            f"need at least {_required_length(order)} steps for order {order}, got {x.shape[0]}"
        )
    xc = _context_codes(x, order)
    yc = _context_codes(y, order)
    value = _plugin_di([xc, yc], y[order:])
    return DiEstimate(source=source_id, target=target_id, value=value, order=order)


def conditional_directed_information(x, y, mediator, order: int = 3) -> float:
    """DI(x -> y) conditioned additionally on a mediator's k-step context."""
    x = _as_series(x, "x")
    y = _as_series(y, "y")
    m = _as_series(mediator, "mediator")
    if not (x.shape == y.shape == m.shape):
        raise ValueError("all series must have equal length")
    if x.shape[0] < _required_length(order):
        raise InsufficientDataError(
            f"need at least {_required_length(order)} steps for order {order}, got {x.shape[0]}"
        )
    return _plugin_di([_context_codes(x, order), _context_codes(y, order), _context_codes(m, order)],
                      y[order:])


def _best_lag(source: np.ndarray, target: np.ndarray, max_lag: int) -> int:
    """Lag in [1, max_lag] with the highest source/target co-occurrence."""
    scores = [float(np.mean(source[:-lag] & target[lag:])) for lag in range(1, max_lag + 1)]
    return int(np.argmax(scores)) + 1


def _trigger_probability(source: np.ndarray, target: np.ndarray, lag: int) -> float:
    fired = source[:-lag] == 1
    if not fired.any():
        return 0.0
    return float(target[lag:][fired].mean())


def infer_causal_graph(
    record, max_lag: int = 4, order: int = 3, threshold: float = 0.02,
    device_ids=None,
) -> CausalGraph:
    """Recover trigger edges (source, target, lag, strength) from a record.

    Keeps ordered pairs with DI >= threshold, then drops candidates whose
    conditional DI given any stronger kept parent of the same target falls
    below the threshold.
    """
    if isinstance(record, TransmissionRecord):
        data, ids = record.data, record.device_ids
    else:
        data = np.asarray(record)
        ids = tuple(device_ids) if device_ids is not None else tuple(
            f"device_{j}" for j in range(data.shape[1])
        )
    data = data.astype(np.int64)
    cols = {d: data[:, j] for j, d in enumerate(ids)}

    candidates = []
    for s, d in itertools.permutations(ids, 2):
        est = directed_information(cols[s], cols[d], order, source_id=s, target_id=d)
        if est.value >= threshold:
            candidates.append(est)

    edges = []
    for target in ids:
        incoming = sorted((c for c in candidates if c.target == target),
                          key=lambda c: c.value, reverse=True)
        kept = []
        for cand in incoming:
            explained = any(
                conditional_directed_information(cols[cand.source], cols[target], cols[parent.source], order)
                < threshold
                for parent in kept
            )
            if explained:
                continue
            lag = _best_lag(cols[cand.source], cols[target], max_lag)
            kept.append(cand)
            edges.append(CausalEdge(
                source=cand.source,
                target=target,
                lag=lag,
                strength=cand.value,
                trigger_prob=_trigger_probability(cols[cand.source], cols[target], lag),
            ))
    edges.sort(key=lambda e: (e.target, e.source))
    return CausalGraph(edges=edges, device_ids=ids)


def predict_next(history, graph: CausalGraph) -> np.ndarray:
    """Rule-based next-slot prediction from recent history rows.

    A device is nominated when the trigger probabilities of its active edges
    (edges whose source fired `lag` steps ago) combine to at least 0.5 under
    independent-OR; devices without incoming edges are never nominated.
    """
    history = np.asarray(history)
    if history.ndim != 2 or history.shape[1] != len(graph.device_ids):
        raise ShapeError(
            f"history shape {history.shape} does not match {len(graph.device_ids)} devices"
        )
    if history.shape[0] < graph.max_lag:
        raise ValueError(
            f"need at least {graph.max_lag} history rows for this graph, got {history.shape[0]}"
        )
    index = {d: j for j, d in enumerate(graph.device_ids)}
    pred = np.zeros(len(graph.device_ids), dtype=np.uint8)
    for target in graph.device_ids:
        miss = 1.0
        for edge in graph.parents(target):
            if history[-edge.lag, index[edge.source]] == 1:
                miss *= 1.0 - edge.trigger_prob
        if 1.0 - miss >= 0.5:
            pred[index[target]] = 1
    return pred


def permutation_threshold(
    record, order: int = 3, n_permutations: int = 50,
    quantile: float = 0.99, seed: int = 0,
) -> float:
    """Null-calibrated DI threshold via circular shifts of the source series.

    For every ordered device pair the source column is circularly shifted by a
    random offset (destroying lagged coupling while preserving marginals) and
    DI re-estimated; the returned threshold is the requested quantile of the
    pooled null values.
    """
    if isinstance(record, TransmissionRecord):
        data, ids = record.data, record.device_ids
    else:
        data = np.asarray(record)
        ids = tuple(f"device_{j}" for j in range(data.shape[1]))
    data = data.astype(np.int64)
    rng = np.random.default_rng(seed)
    n = data.shape[0]
    null_values = []
    for s, d in itertools.permutations(range(len(ids)), 2):
        for _ in range(n_permutations):
            shift = int(rng.integers(order + 1, n - order - 1))
            shifted = np.roll(data[:, s], shift)
            null_values.append(directed_information(shifted, data[:, d], order).value)
    return float(np.quantile(null_values, quantile))


class DirectedInfoPredictor(BaseEstimator):
    """Estimator facade: infer a causal graph from training rows, then predict
    next-slot transmissions for windows with the rule-based trigger logic."""

    def __init__(self, order: int = 3, max_lag: int = 4, threshold: float = 0.02):
        self.order = order
        self.max_lag = max_lag
        self.threshold = threshold

    def fit(self, X, y=None, device_ids=None) -> "DirectedInfoPredictor":
        """Infer the causal graph from a (steps, devices) history or record."""
        if isinstance(X, TransmissionRecord):
            data, ids = X.data, X.device_ids
        else:
            data = check_binary(X, "X", 2).astype(np.uint8)
            ids = tuple(device_ids) if device_ids is not None else None
        self.graph_ = infer_causal_graph(data, self.max_lag, self.order, self.threshold,
                                         device_ids=ids)
        self.n_features_in_ = data.shape[1]
        return self

    def _require_fitted(self):
        if not hasattr(self, "graph_"):
            raise RuntimeError("this DirectedInfoPredictor is not fitted yet; call fit first")

    def predict_proba(self, X) -> np.ndarray:
        """Combined trigger probability per device for each window."""
        self._require_fitted()
        X = check_binary(X, "X", 3)
        if X.shape[2] != self.n_features_in_:
            raise ShapeError(
                f"X has {X.shape[2]} devices but the graph was fitted with {self.n_features_in_}"
            )
        if X.shape[1] < self.graph_.max_lag:
            raise ValueError(
                f"windows must span at least {self.graph_.max_lag} steps for this graph"
            )
        index = {d: j for j, d in enumerate(self.graph_.device_ids)}
        miss = np.ones((X.shape[0], self.n_features_in_))
        for edge in self.graph_.edges:
            fired = X[:, -edge.lag, index[edge.source]] == 1
            miss[fired, index[edge.target]] *= 1.0 - edge.trigger_prob
        return 1.0 - miss

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.uint8)

    def as_slot_predictor(self):
        """Adapt to the grant simulator's history -> next-slot interface."""
        self._require_fitted()
        graph = self.graph_

        def predict_slot(history: np.ndarray) -> np.ndarray:
            return predict_next(history, graph)

        return predict_slot
