"""Bayesian hyperparameter search over the forecaster's configuration space.

After a handful of space-filling random trials, a Gaussian-process surrogate
(Matern kernel, via scikit-learn) is fitted to (normalized configuration ->
validation binary accuracy) and the next trial maximizes expected improvement
over a batch of random candidates. Integers are handled by rounding, the two
categorical choices by one-hot encoding, and the learning rate in log10 space.

Determinism: with sequential execution, trial ``i`` of a run uses the seed
``SeedSequence([master_seed, 2, i])`` and the suggestion stream uses
``SeedSequence([master_seed, 1])``, so a run is a pure function of the master
seed; concurrent runs draw the same trial seeds but may visit different
configurations because suggestions depend on completion order.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Matern, WhiteKernel

from fastgrant.errors import TuningError
from fastgrant.forecaster import LstmForecaster
from fastgrant.losses import binary_accuracy
from fastgrant.windowing import WindowedDataset, make_windows, split_windows

_INT_DIMS = ("batch_size", "epochs", "num_layers", "hidden_units", "input_units")


@dataclass(frozen=True)
class SearchSpace:
    """Tunable ranges; numeric bounds are inclusive."""

    batch_size: tuple = (32, 128)
    dropout: tuple = (0.1, 0.9)
    epochs: tuple = (1, 50)
    num_layers: tuple = (1, 5)
    hidden_units: tuple = (3, 200)
    input_units: tuple = (10, 200)
    learning_rate: tuple = (0.001, 0.1)  # searched in log10 space
    losses: tuple = ("mse", "logcosh")
    optimizers: tuple = ("adam", "rmsprop")

    @property
    def encoded_dim(self) -> int:
        return 7 + len(self.losses) + len(self.optimizers)

    def sample(self, rng: np.random.Generator) -> dict:
        """Uniform random configuration inside the ranges."""
        return self.decode(rng.random(self.encoded_dim))

    def decode(self, vector: np.ndarray) -> dict:
        """Map a unit-cube vector to a concrete configuration."""
        v = np.clip(np.asarray(vector, dtype=float), 0.0, 1.0)
        params = {}
        for i, name in enumerate(_INT_DIMS):
            lo, hi = getattr(self, name)
            params[name] = int(np.clip(round(lo + v[i] * (hi - lo)), lo, hi))
        lo, hi = self.dropout
        params["dropout"] = float(lo + v[5] * (hi - lo))
        lo, hi = self.learning_rate
        params["learning_rate"] = float(10 ** (math.log10(lo) + v[6] * (math.log10(hi) - math.log10(lo))))
        loss_scores = v[7:7 + len(self.losses)]
        params["loss"] = self.losses[int(np.argmax(loss_scores))]
        opt_scores = v[7 + len(self.losses):]
        params["optimizer"] = self.optimizers[int(np.argmax(opt_scores))]
        return params

    def encode(self, params: dict) -> np.ndarray:
        """Map a configuration back onto the unit cube (one-hot categoricals)."""
        v = np.zeros(self.encoded_dim)
        for i, name in enumerate(_INT_DIMS):
            lo, hi = getattr(self, name)
            v[i] = (params[name] - lo) / (hi - lo) if hi > lo else 0.0
        lo, hi = self.dropout
        v[5] = (params["dropout"] - lo) / (hi - lo)
        lo, hi = self.learning_rate
        v[6] = (math.log10(params["learning_rate"]) - math.log10(lo)) / (math.log10(hi) - math.log10(lo))
        v[7 + self.losses.index(params["loss"])] = 1.0
        v[7 + len(self.losses) + self.optimizers.index(params["optimizer"])] = 1.0
        return v

    def contains(self, params: dict) -> bool:
        for name in _INT_DIMS + ("dropout", "learning_rate"):
            lo, hi = getattr(self, name)
            if not lo <= params[name] <= hi:
                return False
        return params["loss"] in self.losses and params["optimizer"] in self.optimizers


@dataclass
class TrialResult:
    """One completed (or failed) training trial."""

    params: dict
    objective: float | None
    wall_time: float
    seed: int
    trial_index: int
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.objective is not None

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "params": self.params,
            "objective": self.objective,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "error": self.error,
        }


def _norm_cdf(z: np.ndarray) -> np.ndarray:
    return np.array([0.5 * (1.0 + math.erf(x / math.sqrt(2.0))) for x in np.ravel(z)]).reshape(np.shape(z))


def _norm_pdf(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def suggest(
    history: list,
    space: SearchSpace,
    rng: np.random.Generator,
    n_initial: int = 5,
    n_candidates: int = 512,
) -> dict:
    """Propose the next configuration to try.

    The first ``n_initial`` suggestions (and any degenerate-history situation)
    are random draws; afterwards a GP surrogate scores ``n_candidates`` random
    points by expected improvement over the incumbent.
    """
    completed = [t for t in history if t.ok]
    if len(completed) < n_initial:
        return space.sample(rng)
    X = np.array([space.encode(t.params) for t in completed])
    y = np.array([t.objective for t in completed])
    candidates = rng.random((n_candidates, space.encoded_dim))
    if float(np.std(y)) == 0.0 or np.allclose(X, X[0]):
        return space.decode(candidates[0])

    kernel = ConstantKernel(1.0, (1e-3, 1e3)) * Matern(
        length_scale=np.full(space.encoded_dim, 0.5),
        length_scale_bounds=(1e-2, 1e2),
        nu=2.5,
    ) + WhiteKernel(noise_level=1e-4, noise_level_bounds=(1e-8, 1e-1))
    gp = GaussianProcessRegressor(kernel=kernel, normalize_y=True, alpha=1e-10,
                                  n_restarts_optimizer=0, random_state=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=ConvergenceWarning)
        try:
            gp.fit(X, y)
        except (np.linalg.LinAlgError, ValueError):
            return space.decode(candidates[0])

    mu, sigma = gp.predict(candidates, return_std=True)
    best = float(y.max())
    improvement = mu - best - 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improvement / sigma, 0.0)
    ei = np.where(sigma > 0, improvement * _norm_cdf(z) + sigma * _norm_pdf(z),
                  np.maximum(improvement, 0.0))
    return space.decode(candidates[int(np.argmax(ei))])


def _trial_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, 2, index]).generate_state(1)[0])


def _run_trial(objective, params: dict, seed: int, index: int) -> TrialResult:
    start = time.perf_counter()
    try:
        value = float(objective(params, seed))
    except Exception as exc:  # a failed trial is recorded, not fatal
        return TrialResult(params=params, objective=None, wall_time=time.perf_counter() - start,
                           seed=seed, trial_index=index, error=f"{type(exc).__name__}: {exc}")
    return TrialResult(params=params, objective=value, wall_time=time.perf_counter() - start,
                       seed=seed, trial_index=index)


def search(
    objective,
    space: SearchSpace,
    budget: int,
    seed: int,
    n_initial: int = 5,
    n_candidates: int = 512,
    jobs: int = 1,
) -> tuple:
    """Run ``budget`` trials of ``objective(params, trial_seed) -> score`` and
    return (best TrialResult, full log). Higher scores are better."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    log: list = []

    if jobs <= 1:
        for i in range(budget):
            params = suggest(log, space, rng, n_initial, n_candidates)
            log.append(_run_trial(objective, params, _trial_seed(seed, i), i))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pending = {}
            submitted = 0
            while submitted < budget or pending:
                while submitted < budget and len(pending) < jobs:
                    params = suggest(log, space, rng, n_initial, n_candidates)
                    fut = pool.submit(_run_trial, objective, params,
                                      _trial_seed(seed, submitted), submitted)
                    pending[fut] = submitted
                    submitted += 1
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    pending.pop(fut)
                    log.append(fut.result())
        log.sort(key=lambda t: t.trial_index)

    completed = [t for t in log if t.ok]
    if not completed:
        raise TuningError(
            "all trials failed; first error: " + (log[0].error or "unknown")
        )
    best = max(completed, key=lambda t: t.objective)
    return best, log


@dataclass
class _DatasetObjective:
    """Train a forecaster on the sub-fold and score accuracy on the validation
    fold. Picklable so trials can run in worker processes."""

    train_inputs: np.ndarray
    train_labels: np.ndarray
    val_inputs: np.ndarray
    val_labels: np.ndarray
    threshold: float = 0.5

    def __call__(self, params: dict, seed: int) -> float:
        model = LstmForecaster(seed=seed, threshold=self.threshold, **params)
        model.fit(self.train_inputs, self.train_labels)
        return binary_accuracy(model.predict_proba(self.val_inputs), self.val_labels, self.threshold)


def tune(
    dataset: WindowedDataset,
    budget: int,
    seed: int,
    space: SearchSpace | None = None,
    validation_fraction: float = 0.2,
    n_initial: int = 5,
    n_candidates: int = 512,
    jobs: int = 1,
) -> tuple:
    """Bayesian-optimize the forecaster on a training dataset.

    The chronological last ``validation_fraction`` of the windows is held out
    as the validation fold; each trial trains a fresh model on the remainder
    and is scored by validation binary accuracy.
    """
    space = space or SearchSpace()
    sub_train, validation = split_windows(dataset, 1.0 - validation_fraction)
    objective = _DatasetObjective(
        train_inputs=sub_train.inputs, train_labels=sub_train.labels,
        val_inputs=validation.inputs, val_labels=validation.labels,
    )
    return search(objective, space, budget, seed, n_initial, n_candidates, jobs)


def sweep_sequence_length(
    lengths,
    record,
    budget: int,
    seed: int,
    train_fraction: float = 0.8,
    space: SearchSpace | None = None,
    jobs: int = 1,
) -> list:
    """Tune once per requested window length; returns one row per length.

    Rows carry the best validation accuracy and configuration, or the error
    message for lengths whose tuning failed (marked gaps).
    """
    rows = []
    for i, seq_len in enumerate(lengths):
        row = {"sequence_length": int(seq_len), "best_objective": None,
               "best_params": None, "error": None}
        try:
            ds = make_windows(record, int(seq_len))
            train, _ = split_windows(ds, train_fraction)
            best, log = tune(train, budget, _trial_seed(seed, i), space=space, jobs=jobs)
            row["best_objective"] = best.objective
            row["best_params"] = best.params
            row["trials"] = [t.to_dict() for t in log]
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def save_trial_log(log: list, path) -> None:
    """Write one JSON object per line, one line per trial."""
    with Path(path).open("w") as fh:
        for t in log:
            fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")
