import numpy as np
import pytest

from fastgrant.optim import Adam, RMSProp, make_optimizer


def test_adam_first_step_magnitude():
    # t=1: m_hat = g, v_hat = g^2, so the step is -lr * g/(|g| + eps)
    p = [np.array([0.0])]
    Adam(learning_rate=0.007).step(p, [np.array([1.0])])
    assert p[0][0] == pytest.approx(-0.007, rel=1e-6)


def test_adam_zero_gradient_leaves_params_unchanged():
    p = [np.array([1.5, -2.0]), np.array([[0.25]])]
    before = [a.copy() for a in p]
    opt = Adam(learning_rate=0.1)
    for _ in range(3):
        opt.step(p, [np.zeros_like(a) for a in p])
    for a, b in zip(p, before):
        np.testing.assert_array_equal(a, b)


def test_adam_first_step_is_negative_sign_of_gradient():
    rng = np.random.default_rng(0)
    g = rng.normal(size=7) * 10.0
    p = [np.zeros(7)]
    Adam(learning_rate=0.01).step(p, [g])
    np.testing.assert_allclose(p[0], -0.01 * np.sign(g), rtol=1e-6)


def test_adam_hand_evaluated_second_step():
    # scalar parameter, constant gradient 1
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p = [np.array([0.0])]
    opt = Adam(learning_rate=lr)
    opt.step(p, [np.array([1.0])])
    opt.step(p, [np.array([1.0])])
    m2 = b1 * (1 - b1) + (1 - b1)  # 0.19
    v2 = b2 * (1 - b2) + (1 - b2)
    expected = -lr * 1.0 / (np.sqrt(1.0) + eps)  # step 1
    expected += -lr * (m2 / (1 - b1**2)) / (np.sqrt(v2 / (1 - b2**2)) + eps)
    assert p[0][0] == pytest.approx(expected, rel=1e-10)


def test_rmsprop_hand_evaluated_first_step():
    lr, rho, eps = 0.05, 0.9, 1e-8
    p = [np.array([0.0])]
    RMSProp(learning_rate=lr).step(p, [np.array([2.0])])
    v = (1 - rho) * 4.0
    assert p[0][0] == pytest.approx(-lr * 2.0 / (np.sqrt(v) + eps), rel=1e-10)


def test_rmsprop_zero_gradient_leaves_params_unchanged():
    p = [np.array([3.0])]
    RMSProp(learning_rate=0.5).step(p, [np.array([0.0])])
    assert p[0][0] == 3.0


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        Adam(0.01).step([np.zeros(3)], [np.zeros(4)])
    with pytest.raises(ValueError):
        RMSProp(0.01).step([np.zeros((2, 2))], [np.zeros(2)])


def test_make_optimizer_names():
    assert isinstance(make_optimizer("adam", 0.01), Adam)
    assert isinstance(make_optimizer("rmsprop", 0.01), RMSProp)
    with pytest.raises(ValueError):
        make_optimizer("sgd", 0.01)
