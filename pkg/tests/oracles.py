"""Independent reference implementations shared by unit and acceptance tests.

Everything in here deliberately avoids the package's fast code paths: finite
differences instead of BPTT, scalar loops instead of vectorized counting, and
exact enumeration instead of sampling, so the two sides of each check stay
independent.
"""

import math
from fractions import Fraction

import numpy as np

from fastgrant.losses import loss_logcosh, loss_mse
from fastgrant.lstm import forward


def finite_difference_grads(params, batch, labels, loss_name, mask_seed, eps=1e-5):
    """Central finite differences of the loss w.r.t. every parameter.

    Each evaluation re-runs forward with a freshly seeded rng so dropout masks
    are frozen across perturbations.
    """
    loss_fn = {"mse": loss_mse, "logcosh": loss_logcosh}[loss_name]

    def evaluate():
        pred, _ = forward(
            params, batch, training=True,
            rng=np.random.default_rng(mask_seed), return_cache=False,
        )
        return loss_fn(pred, labels)

    grads = []
    for arr in params.flat():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            up = evaluate()
            arr[idx] = orig - eps
            down = evaluate()
            arr[idx] = orig
            g[idx] = (up - down) / (2.0 * eps)
        grads.append(g)
    return grads


def max_relative_error(analytic, reference, zero_floor=1e-6):
    """Worst-case elementwise relative error between two gradient lists.

    Entries whose magnitude on both sides sits below ``zero_floor`` are judged
    against the floor instead, since central differences with eps=1e-5 carry
    ~1e-11 absolute noise and cannot resolve ratios of smaller gradients.
    """
    worst = 0.0
    for a, r in zip(analytic, reference):
        scale = np.maximum(np.abs(a), np.abs(r))
        err = np.abs(a - r)
        rel = np.where(scale > zero_floor, err / np.maximum(scale, zero_floor), 0.0)
        worst = max(worst, float(rel.max()))
    return worst


def confusion_scalar_loop(pred, labels):
    """Naive per-entry counting oracle; returns (tp, fp, tn, fn) per column."""
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    n_dev = pred.shape[1]
    counts = []
    for j in range(n_dev):
        tp = fp = tn = fn = 0
        for t in range(pred.shape[0]):
            p, y = int(pred[t, j]), int(labels[t, j])
            if p == 1 and y == 1:
                tp += 1
            elif p == 1 and y == 0:
                fp += 1
            elif p == 0 and y == 0:
                tn += 1
            else:
                fn += 1
        counts.append((tp, fp, tn, fn))
    return counts


def metrics_exact(tp, fp, tn, fn):
    """Rational-arithmetic metric formulas; returns floats of exact fractions."""
    total = tp + fp + tn + fn
    sens = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    fdr = Fraction(fp, tp + fp) if tp + fp else Fraction(0)
    acc = Fraction(tp + tn, total) if total else Fraction(0)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom else 0.0
    return float(sens), float(fdr), float(acc), float(mcc)


def chain_pair_distribution(event_len, phase_rate_x, lag, p_trigger, k):
    """Exact joint pmf of (source context, target context, next target) for a
    two-device chain where the target fires ``lag`` steps after the source
    with probability ``p_trigger``, gated to stay inside an event.

    ``phase_rate_x[p]`` is the source's transmit probability at event phase p.
    Returns a dict mapping (x_ctx bits, y_ctx bits, y_next) -> probability,
    pooled uniformly over phases, which is the population functional the
    plug-in estimator converges to.
    """
    L = event_len
    joint = {}
    # target value at absolute step j needs source at j-lag and an in-event check
    for phase in range(L):
        # steps involved: t-k .. t for both series; source bits needed for the
        # target context and next value are x at (j - lag) for j in t-k..t
        t_steps = list(range(-k, 1))          # relative to the label step
        x_needed = sorted({s for s in t_steps} | {s - lag for s in t_steps})
        for assignment in range(2 ** len(x_needed)):
            bits = {s: (assignment >> n) & 1 for n, s in enumerate(x_needed)}
            p_x = 1.0
            for s, v in bits.items():
                rate = phase_rate_x[(phase + s) % L]
                p_x *= rate if v else (1.0 - rate)
            if p_x == 0.0:
                continue
            # enumerate trigger noise for each target step that can fire
            fire_steps = []
            for s in t_steps:
                in_event = ((phase + s) % L) >= lag  # source step lies in the same event
                if in_event and bits[s - lag] == 1 and p_trigger > 0.0:
                    fire_steps.append(s)
            for noise in range(2 ** len(fire_steps)):
                p_n = 1.0
                y = {s: 0 for s in t_steps}
                for n, s in enumerate(fire_steps):
                    fired = (noise >> n) & 1
                    p_n *= p_trigger if fired else (1.0 - p_trigger)
                    y[s] = fired
                if p_n == 0.0:
                    continue
                x_ctx = tuple(bits[s] for s in range(-k, 0))
                y_ctx = tuple(y[s] for s in range(-k, 0))
                key = (x_ctx, y_ctx, y[0])
                joint[key] = joint.get(key, 0.0) + p_x * p_n / L
    return joint


def exact_directed_information(joint):
    """Exact DI rate in bits/step for a pooled joint pmf from
    chain_pair_distribution: I(source context; next target | target context)."""
    p_xy_y = {}
    p_y_y = {}
    for (xc, yc, y), p in joint.items():
        p_xy_y[(xc, yc, y)] = p_xy_y.get((xc, yc, y), 0.0) + p
        p_y_y[(yc, y)] = p_y_y.get((yc, y), 0.0) + p
    p_xy = {}
    p_y = {}
    for (xc, yc, y), p in p_xy_y.items():
        p_xy[(xc, yc)] = p_xy.get((xc, yc), 0.0) + p
    for (yc, y), p in p_y_y.items():
        p_y[yc] = p_y.get(yc, 0.0) + p
    di = 0.0
    for (xc, yc, y), p in p_xy_y.items():
        cond_full = p / p_xy[(xc, yc)]
        cond_self = p_y_y[(yc, y)] / p_y[yc]
        if cond_full > 0 and cond_self > 0:
            di += p * math.log2(cond_full / cond_self)
    return di
