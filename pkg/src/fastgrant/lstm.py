"""From-scratch stacked LSTM: initialization, forward pass, and exact BPTT.

Layer ``l`` consumes the (optionally dropout-masked) hidden-state sequence of
layer ``l-1``; only the final time step of the top layer feeds a dense head
whose logistic output gives per-device transmission probabilities in (0, 1).
Gate pre-activations are fused along the last axis in the order (input,
forget, candidate, output). All math is float64 so analytic gradients can be
compared against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fastgrant.errors import ShapeError, StateError


def sigmoid(x: np.ndarray) -> np.ndarray:
    # exp overflow saturates to the correct limit, so silence the warning
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


@dataclass
class LstmParams:
    """All trainable arrays of a stacked LSTM plus the dense output head."""

    layer_sizes: tuple
    num_inputs: int
    num_outputs: int
    dropout_rate: float
    weights: list = field(default_factory=list)  # per layer: [W, U, b]
    dense_w: np.ndarray = None
    dense_b: np.ndarray = None

    def flat(self) -> list:
        """References to every parameter array in canonical update order."""
        out = []
        for W, U, b in self.weights:
            out.extend((W, U, b))
        out.extend((self.dense_w, self.dense_b))
        return out

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes)


def init_params(
    layer_sizes,
    num_inputs: int,
    num_outputs: int,
    dropout_rate: float,
    seed: int,
) -> LstmParams:
    """Uniform +-1/sqrt(fan_in) weights, forget-gate bias 1, other biases 0.

    Draw order (fixed for reproducibility): per layer W then U, then the dense
    weight matrix.
    """
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if not layer_sizes:
        raise ValueError("layer_sizes must contain at least one layer")
    if any(s < 1 for s in layer_sizes) or num_inputs < 1 or num_outputs < 1:
        raise ValueError(f"all sizes must be >= 1, got layers {layer_sizes}, "
                         f"inputs {num_inputs}, outputs {num_outputs}")
    if not 0.0 <= dropout_rate < 1.0:
        raise ValueError(f"dropout_rate must lie in [0, 1), got {dropout_rate}")
    rng = np.random.default_rng(seed)
    params = LstmParams(
        layer_sizes=layer_sizes,
        num_inputs=num_inputs,
        num_outputs=num_outputs,
        dropout_rate=float(dropout_rate),
    )
    fan_in = num_inputs
    for h in layer_sizes:
        lim_w = 1.0 / np.sqrt(fan_in)
        lim_u = 1.0 / np.sqrt(h)
        W = rng.uniform(-lim_w, lim_w, size=(fan_in, 4 * h))
        U = rng.uniform(-lim_u, lim_u, size=(h, 4 * h))
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0
        params.weights.append([W, U, b])
        fan_in = h
    lim = 1.0 / np.sqrt(layer_sizes[-1])
    params.dense_w = rng.uniform(-lim, lim, size=(layer_sizes[-1], num_outputs))
    params.dense_b = np.zeros(num_outputs)
    return params


def forward(
    params: LstmParams,
    batch: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
    return_cache: bool = True,
) -> tuple:
    """Run the stacked LSTM over a (batch, seq_len, devices) tensor.

    Returns (predictions, cache); predictions are logistic outputs of shape
    (batch, num_outputs). Inverted dropout is applied to hidden-state
    sequences passed between layers only when ``training`` is set, so two
    inference calls agree bit-exactly.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"batch must be 3-dimensional, got shape {x.shape}")
    B, T, D = x.shape
    if D != params.num_inputs:
        raise ShapeError(f"batch has {D} devices but the model expects {params.num_inputs}")
    if T < 1:
        raise ShapeError("batch must contain at least one time step")
    use_dropout = training and params.dropout_rate > 0.0 and params.num_layers > 1
    if use_dropout and rng is None:
        raise ValueError("training forward with dropout requires an rng")

    layer_caches = []
    for l, (W, U, b) in enumerate(params.weights):
        h_units = params.layer_sizes[l]
        xw = x.reshape(B * T, -1) @ W
        xw = xw.reshape(B, T, 4 * h_units)
        hidden = np.empty((B, T, h_units))
        if return_cache:
            gates_i = np.empty((B, T, h_units))
            gates_f = np.empty((B, T, h_units))
            gates_g = np.empty((B, T, h_units))
            gates_o = np.empty((B, T, h_units))
            cells = np.empty((B, T, h_units))
            tanh_c = np.empty((B, T, h_units))
        h = np.zeros((B, h_units))
        c = np.zeros((B, h_units))
        for t in range(T):
            a = xw[:, t] + h @ U + b
            i = sigmoid(a[:, :h_units])
            f = sigmoid(a[:, h_units:2 * h_units])
            g = np.tanh(a[:, 2 * h_units:3 * h_units])
            o = sigmoid(a[:, 3 * h_units:])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            hidden[:, t] = h
            if return_cache:
                gates_i[:, t], gates_f[:, t] = i, f
                gates_g[:, t], gates_o[:, t] = g, o
                cells[:, t], tanh_c[:, t] = c, tc

        mask = None
        is_last = l == params.num_layers - 1
        out_seq = hidden
        if not is_last and use_dropout:
            keep = 1.0 - params.dropout_rate
            mask = (rng.random((B, T, h_units)) < keep) / keep
            out_seq = hidden * mask
        if return_cache:
            layer_caches.append({
                "x": x, "i": gates_i, "f": gates_f, "g": gates_g, "o": gates_o,
                "c": cells, "tanh_c": tanh_c, "h": hidden, "mask": mask,
            })
        x = out_seq

    h_last = x[:, -1]
    z = h_last @ params.dense_w + params.dense_b
    pred = sigmoid(z)
    cache = None
    if return_cache:
        cache = {
            "layers": layer_caches,
            "h_last": h_last,
            "pred": pred,
            "training": training,
            "layer_sizes": params.layer_sizes,
        }
    return pred, cache


def backward(params: LstmParams, cache: dict, dpred: np.ndarray) -> list:
    """Exact gradients w.r.t. every parameter, in ``params.flat()`` order.

    ``dpred`` is the loss gradient w.r.t. the logistic predictions; the chain
    runs back through the dense head, the top layer's final hidden state, and
    full-length BPTT in every layer, including dropout masks.
    """
    if cache is None or cache.get("layer_sizes") != params.layer_sizes or not cache.get("training"):
        raise StateError("backward requires the cache of a matching training-mode forward call")
    pred = cache["pred"]
    dpred = np.asarray(dpred, dtype=np.float64)
    if dpred.shape != pred.shape:
        raise ShapeError(f"dpred shape {dpred.shape} does not match predictions {pred.shape}")

    dz = dpred * pred * (1.0 - pred)
    d_dense_w = cache["h_last"].T @ dz
    d_dense_b = dz.sum(axis=0)

    grads = [None] * len(params.weights)
    dh_seq = None  # gradient w.r.t. the current layer's (post-dropout) output sequence
    dh_final = dz @ params.dense_w.T

    for l in range(params.num_layers - 1, -1, -1):
        lc = cache["layers"][l]
        W, U, _ = params.weights[l]
        B, T, h_units = lc["h"].shape
        if dh_seq is None:
            dH = np.zeros((B, T, h_units))
            dH[:, -1] = dh_final
        else:
            dH = dh_seq
        if lc["mask"] is not None:
            dH = dH * lc["mask"]

        i, f, g, o = lc["i"], lc["f"], lc["g"], lc["o"]
        c, tanh_c, h = lc["c"], lc["tanh_c"], lc["h"]
        da = np.empty((B, T, 4 * h_units))
        dc_next = np.zeros((B, h_units))
        dh_rec = np.zeros((B, h_units))
        for t in range(T - 1, -1, -1):
            dh = dH[:, t] + dh_rec
            it, ft, gt, ot = i[:, t], f[:, t], g[:, t], o[:, t]
            tc = tanh_c[:, t]
            do = dh * tc
            dc = dh * ot * (1.0 - tc * tc) + dc_next
            c_prev = c[:, t - 1] if t > 0 else 0.0
            da_t = da[:, t]
            da_t[:, :h_units] = dc * gt * it * (1.0 - it)
            da_t[:, h_units:2 * h_units] = dc * c_prev * ft * (1.0 - ft)
            da_t[:, 2 * h_units:3 * h_units] = dc * it * (1.0 - gt * gt)
            da_t[:, 3 * h_units:] = do * ot * (1.0 - ot)
            dc_next = dc * ft
            dh_rec = da_t @ U.T

        x = lc["x"]
        da_flat = da.reshape(B * T, 4 * h_units)
        dW = x.reshape(B * T, -1).T @ da_flat
        h_prev = np.zeros_like(h)
        h_prev[:, 1:] = h[:, :-1]
        dU = h_prev.reshape(B * T, h_units).T @ da_flat
        db = da_flat.sum(axis=0)
        grads[l] = [dW, dU, db]
        dh_seq = (da_flat @ W.T).reshape(B, T, -1)

    flat = []
    for layer_grads in grads:
        flat.extend(layer_grads)
    flat.extend((d_dense_w, d_dense_b))
    return flat


def backward_from_loss(params: LstmParams, cache: dict, labels: np.ndarray, loss: str) -> list:
    """Gradients of the named loss at the cached predictions w.r.t. all parameters."""
    from fastgrant.losses import loss_value_and_grad

    _, dpred = loss_value_and_grad(loss, cache["pred"], np.asarray(labels, dtype=np.float64))
    return backward(params, cache, dpred)
