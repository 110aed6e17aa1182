"""Sliding-window restructuring of transmission records into LSTM batches.

Each window is ``seq_len`` consecutive record rows; its label is the single
row immediately after the window. Windows are ordered chronologically and the
train/test split is a contiguous prefix split, so no test label ever precedes
a training label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fastgrant.traffic import TransmissionRecord


@dataclass
class WindowedDataset:
    """3D input tensor (windows x seq_len x devices) with next-step label rows."""

    inputs: np.ndarray
    labels: np.ndarray
    seq_len: int
    source_offsets: np.ndarray

    @property
    def num_windows(self) -> int:
        return self.inputs.shape[0]

    @property
    def num_devices(self) -> int:
        return self.inputs.shape[2]

    def take(self, indices) -> "WindowedDataset":
        return WindowedDataset(
            inputs=self.inputs[indices],
            labels=self.labels[indices],
            seq_len=self.seq_len,
            source_offsets=self.source_offsets[indices],
        )


def make_windows(record, seq_len: int, stride: int = 1) -> WindowedDataset:
    """Slice a record into overlapping windows plus next-step labels.

    Windows start at offsets 0, stride, 2*stride, ... for as long as the label
    row ``offset + seq_len`` still exists.
    """
    data = record.data if isinstance(record, TransmissionRecord) else np.asarray(record)
    total_steps = data.shape[0]
    if seq_len < 1:
        raise ValueError(f"seq_len must be >= 1, got {seq_len}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if seq_len >= total_steps:
        raise ValueError(f"seq_len {seq_len} must be smaller than the record length {total_steps}")
    offsets = np.arange(0, total_steps - seq_len, stride)
    windows = np.lib.stride_tricks.sliding_window_view(data, seq_len, axis=0)
    inputs = windows[offsets].transpose(0, 2, 1).copy()
    labels = data[offsets + seq_len].copy()
    return WindowedDataset(inputs=inputs, labels=labels, seq_len=seq_len, source_offsets=offsets)


def split_windows(ds: WindowedDataset, train_fraction: float) -> tuple:
    """Chronological prefix split into (train, test); both parts must be non-empty."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = round(ds.num_windows * train_fraction)
    if n_train == 0 or n_train == ds.num_windows:
        raise ValueError(
            f"train_fraction {train_fraction} leaves an empty partition "
            f"({n_train} of {ds.num_windows} windows in train)"
        )
    return ds.take(slice(0, n_train)), ds.take(slice(n_train, ds.num_windows))
