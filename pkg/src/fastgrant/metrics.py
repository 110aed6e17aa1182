"""Confusion counting and binary prediction metrics, per device and pooled.

Aggregate values are micro-averages: metrics computed from confusion counts
pooled over all devices, not means of per-device metrics. Any metric whose
denominator is zero is reported as 0 and listed in the ``flags`` of its row.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fastgrant._validation import check_binary, check_same_shape

METRIC_NAMES = ("sensitivity", "fdr", "accuracy", "mcc")


@dataclass
class ConfusionCounts:
    """Per-device true/false positive/negative counts."""

    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray
    device_ids: tuple

    def totals(self) -> tuple:
        """(tp, fp, tn, fn) pooled over all devices."""
        return (int(self.tp.sum()), int(self.fp.sum()), int(self.tn.sum()), int(self.fn.sum()))

    def per_device(self, j: int) -> tuple:
        return (int(self.tp[j]), int(self.fp[j]), int(self.tn[j]), int(self.fn[j]))


def confusion(pred, labels, device_ids=None) -> ConfusionCounts:
    """Count tp/fp/tn/fn per device column of binary predictions vs labels."""
    pred = check_binary(pred, "pred", 2).astype(bool)
    labels = check_binary(labels, "labels", 2).astype(bool)
    check_same_shape(pred, labels, "pred", "labels")
    if device_ids is None:
        device_ids = tuple(f"device_{j}" for j in range(pred.shape[1]))
    return ConfusionCounts(
        tp=(pred & labels).sum(axis=0).astype(np.int64),
        fp=(pred & ~labels).sum(axis=0).astype(np.int64),
        tn=(~pred & ~labels).sum(axis=0).astype(np.int64),
        fn=(~pred & labels).sum(axis=0).astype(np.int64),
        device_ids=tuple(device_ids),
    )


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> dict:
    """Sensitivity, FDR, accuracy, and MCC from one confusion quadruple.

    Products use Python integers, so MCC is exact up to the final division
    even for very long records.
    """
    tp, fp, tn, fn = int(tp), int(fp), int(tn), int(fn)
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("cannot compute metrics from empty counts")
    flags = []
    if tp + fn > 0:
        sensitivity = tp / (tp + fn)
    else:
        sensitivity = 0.0
        flags.append("sensitivity")
    if tp + fp > 0:
        fdr = fp / (tp + fp)
    else:
        fdr = 0.0
        flags.append("fdr")
    accuracy = (tp + tn) / total
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom > 0:
        mcc = (tp * tn - fp * fn) / math.sqrt(denom)
    else:
        mcc = 0.0
        flags.append("mcc")
    return {
        "sensitivity": sensitivity,
        "fdr": fdr,
        "accuracy": accuracy,
        "mcc": mcc,
        "flags": tuple(flags),
    }


@dataclass
class EvalReport:
    """Per-device and pooled metrics for one predictor on one dataset."""

    predictor_id: str
    dataset_id: str
    per_device: dict
    aggregate: dict
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "predictor_id": self.predictor_id,
            "dataset_id": self.dataset_id,
            "per_device": {d: dict(m, flags=list(m["flags"])) for d, m in self.per_device.items()},
            "aggregate": dict(self.aggregate, flags=list(self.aggregate["flags"])),
            "counts": self.counts,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "EvalReport":
        per_device = {d: dict(m, flags=tuple(m["flags"])) for d, m in payload["per_device"].items()}
        aggregate = dict(payload["aggregate"], flags=tuple(payload["aggregate"]["flags"]))
        return cls(
            predictor_id=payload["predictor_id"],
            dataset_id=payload["dataset_id"],
            per_device=per_device,
            aggregate=aggregate,
            counts=payload.get("counts", {}),
        )

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def evaluate_predictions(pred, labels, device_ids=None, predictor_id="", dataset_id="") -> EvalReport:
    """Build a full report (counts + metrics) for binary predictions."""
    c = confusion(pred, labels, device_ids)
    per_device = {d: metrics_from_counts(*c.per_device(j)) for j, d in enumerate(c.device_ids)}
    tp, fp, tn, fn = c.totals()
    counts = {d: dict(zip(("tp", "fp", "tn", "fn"), c.per_device(j))) for j, d in enumerate(c.device_ids)}
    counts["aggregate"] = {"tp": tp, "fp": fp, "tn": tn, "fn": fn}
    return EvalReport(
        predictor_id=predictor_id,
        dataset_id=dataset_id,
        per_device=per_device,
        aggregate=metrics_from_counts(tp, fp, tn, fn),
        counts=counts,
    )


def compare_reports(reports: list) -> dict:
    """Per-metric differences of each report against the first (the baseline).

    All reports must describe the same dataset. Deltas are report minus
    baseline, for every device and the aggregate.
    """
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    baseline = reports[0]
    for r in reports[1:]:
        if r.dataset_id != baseline.dataset_id:
            raise ValueError(
                f"dataset mismatch: {r.predictor_id!r} evaluated on {r.dataset_id!r}, "
                f"baseline on {baseline.dataset_id!r}"
            )
    rows = {}
    scopes = list(baseline.per_device) + ["aggregate"]
    for scope in scopes:
        base_row = baseline.aggregate if scope == "aggregate" else baseline.per_device[scope]
        rows[scope] = {}
        for r in reports[1:]:
            other = r.aggregate if scope == "aggregate" else r.per_device[scope]
            rows[scope][r.predictor_id] = {
                m: other[m] - base_row[m] for m in METRIC_NAMES
            }
    return {
        "baseline": baseline.predictor_id,
        "dataset_id": baseline.dataset_id,
        "deltas": rows,
    }
