import math

import numpy as np
import pytest

from fastgrant.errors import ShapeError, StateError
from fastgrant.lstm import backward, backward_from_loss, forward, init_params
from fastgrant.losses import loss_value_and_grad

from oracles import finite_difference_grads, max_relative_error


def random_small_model(rng):
    n_dev = int(rng.integers(1, 4))
    n_layers = int(rng.integers(1, 4))
    sizes = tuple(int(rng.integers(1, 5)) for _ in range(n_layers))
    seq = int(rng.integers(1, 6))
    batch = int(rng.integers(1, 5))
    dropout = float(rng.choice([0.0, 0.25])) if n_layers > 1 else 0.0
    params = init_params(sizes, n_dev, n_dev, dropout, seed=int(rng.integers(0, 2**31)))
    x = rng.integers(0, 2, size=(batch, seq, n_dev)).astype(float)
    y = rng.integers(0, 2, size=(batch, n_dev)).astype(float)
    return params, x, y


@pytest.mark.parametrize("loss", ["mse", "logcosh"])
def test_bptt_matches_finite_differences(loss):
    rng = np.random.default_rng(42)
    for trial in range(10):
        params, x, y = random_small_model(rng)
        mask_seed = 1000 + trial
        pred, cache = forward(params, x, training=True, rng=np.random.default_rng(mask_seed))
        _, dpred = loss_value_and_grad(loss, pred, y)
        analytic = backward(params, cache, dpred)
        numeric = finite_difference_grads(params, x, y, loss, mask_seed)
        assert max_relative_error(analytic, numeric) < 1e-4


def test_single_cell_forward_matches_hand_evaluation():
    # one device, one unit, one step: evaluate the gate equations inline
    params = init_params((1,), 1, 1, 0.0, seed=0)
    W, U, b = params.weights[0]
    W[:] = np.array([[0.3, -0.2, 0.5, 0.1]])
    U[:] = np.array([[0.7, 0.4, -0.6, 0.2]])
    b[:] = np.array([0.05, 1.0, -0.1, 0.3])
    params.dense_w[:] = np.array([[1.25]])
    params.dense_b[:] = np.array([-0.4])

    x0 = 1.0
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    i = sig(x0 * 0.3 + 0.05)
    g = math.tanh(x0 * 0.5 - 0.1)
    o = sig(x0 * 0.1 + 0.3)
    c = i * g  # initial cell state is zero, so the forget path vanishes
    h = o * math.tanh(c)
    expected = sig(h * 1.25 - 0.4)

    pred, _ = forward(params, np.array([[[x0]]]), training=False, return_cache=False)
    assert pred[0, 0] == pytest.approx(expected, rel=1e-12)


def test_two_step_recurrence_matches_hand_evaluation():
    params = init_params((1,), 1, 1, 0.0, seed=1)
    W, U, b = params.weights[0]
    W[:] = np.array([[0.4, 0.3, -0.5, 0.6]])
    U[:] = np.array([[-0.3, 0.8, 0.2, -0.1]])
    b[:] = np.array([0.0, 1.0, 0.0, 0.0])
    params.dense_w[:] = np.array([[2.0]])
    params.dense_b[:] = np.array([0.1])

    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    h = c = 0.0
    for x_t in (1.0, 0.0):
        i = sig(0.4 * x_t - 0.3 * h)
        f = sig(0.3 * x_t + 0.8 * h + 1.0)
        g = math.tanh(-0.5 * x_t + 0.2 * h)
        o = sig(0.6 * x_t - 0.1 * h)
        c = f * c + i * g
        h = o * math.tanh(c)
    expected = sig(2.0 * h + 0.1)

    pred, _ = forward(params, np.array([[[1.0], [0.0]]]), training=False, return_cache=False)
    assert pred[0, 0] == pytest.approx(expected, rel=1e-12)


def test_zero_weights_give_half_predictions():
    params = init_params((3, 2), 4, 4, 0.0, seed=5)
    for arr in params.flat():
        arr[:] = 0.0
    x = np.random.default_rng(2).integers(0, 2, size=(6, 5, 4)).astype(float)
    pred, _ = forward(params, x, return_cache=False)
    np.testing.assert_allclose(pred, 0.5)


def test_inference_is_deterministic_and_ignores_dropout():
    params = init_params((4, 4), 2, 2, 0.5, seed=9)
    x = np.random.default_rng(3).integers(0, 2, size=(8, 6, 2)).astype(float)
    p1, _ = forward(params, x, training=False, return_cache=False)
    p2, _ = forward(params, x, training=False, return_cache=False)
    np.testing.assert_array_equal(p1, p2)


def test_predictions_strictly_inside_unit_interval():
    rng = np.random.default_rng(11)
    for _ in range(5):
        params, x, _ = random_small_model(rng)
        pred, _ = forward(params, x, return_cache=False)
        assert np.all(pred > 0.0) and np.all(pred < 1.0)


def test_inverted_dropout_preserves_expectation():
    # expectation over masks of the dropped-and-rescaled sequence ~= undropped
    params = init_params((3, 3), 2, 2, 0.3, seed=13)
    x = np.ones((1, 4, 2))
    base, cache = forward(params, x, training=False)
    undropped = cache["layers"][0]["h"]
    rng = np.random.default_rng(99)
    total = np.zeros_like(undropped)
    n_masks = 10_000
    keep = 1.0 - params.dropout_rate
    for _ in range(n_masks):
        mask = (rng.random(undropped.shape) < keep) / keep
        total += undropped * mask
    np.testing.assert_allclose(total / n_masks, undropped, rtol=0.02, atol=1e-3)


def test_zero_residual_gives_zero_gradients_under_mse():
    params = init_params((2,), 2, 2, 0.0, seed=21)
    x = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    pred, cache = forward(params, x, training=True, rng=np.random.default_rng(0))
    grads = backward_from_loss(params, cache, pred.copy(), "mse")
    for g in grads:
        np.testing.assert_allclose(g, 0.0, atol=1e-15)


def test_mse_gradient_linear_in_residual():
    params = init_params((2,), 1, 1, 0.0, seed=22)
    x = np.ones((3, 2, 1))
    pred, cache = forward(params, x, training=True, rng=np.random.default_rng(0))
    y1 = pred - 0.1
    y2 = pred - 0.2  # doubled residual
    g1 = backward_from_loss(params, cache, y1, "mse")
    g2 = backward_from_loss(params, cache, y2, "mse")
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(b, 2.0 * a, rtol=1e-10, atol=1e-14)


def test_backward_rejects_inference_cache():
    params = init_params((2,), 1, 1, 0.0, seed=3)
    x = np.ones((2, 2, 1))
    pred, cache = forward(params, x, training=False)
    with pytest.raises(StateError):
        backward(params, cache, np.zeros_like(pred))


def test_backward_rejects_mismatched_cache():
    a = init_params((2,), 1, 1, 0.0, seed=3)
    b = init_params((3,), 1, 1, 0.0, seed=3)
    x = np.ones((2, 2, 1))
    pred, cache = forward(a, x, training=True, rng=np.random.default_rng(0))
    with pytest.raises(StateError):
        backward(b, cache, np.zeros_like(pred))


def test_forward_shape_errors():
    params = init_params((2,), 3, 3, 0.0, seed=4)
    with pytest.raises(ShapeError):
        forward(params, np.ones((2, 4)))  # not 3D
    with pytest.raises(ShapeError):
        forward(params, np.ones((2, 4, 2)))  # wrong device count
