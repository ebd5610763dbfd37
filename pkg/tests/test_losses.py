import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import affine_gap_trace
from vesselseg.losses import (AffineCritic, EmptyBatchError, LossWeights, NonFiniteCriticError,
                              ShapeMismatchError, fd_gradient, gradient_norm, gradient_penalty,
                              image_features, interpolate, seg_consistency_loss, total_loss,
                              toy_adversarial_fit, wasserstein_loss)


def test_wasserstein_examples():
    assert wasserstein_loss([1, 1], [1, 1]) == 0
    assert wasserstein_loss([2, 4], [1, 1]) == 2.0
    with pytest.raises(EmptyBatchError):
        wasserstein_loss([], [1.0])


@settings(max_examples=100)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20),
       st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
def test_wasserstein_antisymmetric(a, b):
    assert wasserstein_loss(a, b) == -wasserstein_loss(b, a)


def test_gradient_norm_examples():
    assert gradient_norm(AffineCritic(np.array([3.0, 4.0]), 1.0), [0.2, 0.7]) == pytest.approx(5.0, abs=1e-9)
    assert gradient_norm(lambda x: 7.0, np.ones(4)) == 0.0
    assert gradient_norm(lambda x: float(x[0] ** 2), [1.0], 1e-4) == pytest.approx(2.0, abs=1e-7)


@pytest.mark.parametrize("h", [1e-2, 1e-3, 1e-4, 1e-5])
def test_affine_fd_exact(h):
    rng = np.random.default_rng(0)
    a = rng.normal(size=6)
    g = fd_gradient(AffineCritic(a, 0.3), rng.random(6), h)
    assert np.linalg.norm(g - a) / np.linalg.norm(a) <= 1e-9


def test_axis_critic_penalty_exact():
    # realized probe spacing makes unit-axis critics bit-exact
    batch = np.random.default_rng(9).random((20, 3))
    assert gradient_penalty(AffineCritic(np.array([0.0, 1.0, 0.0])), batch, 10) == 0.0


def test_fd_rejects_bad_step_and_nan():
    with pytest.raises(ValueError):
        fd_gradient(lambda x: 0.0, [1.0], 0)
    with pytest.raises(NonFiniteCriticError):
        gradient_norm(lambda x: float("nan"), [1.0])


def test_gradient_penalty_examples():
    batch = np.random.default_rng(1).random((5, 2))
    assert gradient_penalty(AffineCritic(np.array([0.6, 0.8])), batch, 10) == pytest.approx(0, abs=1e-12)
    assert gradient_penalty(AffineCritic(np.array([3.0, 4.0])), batch, 10) == pytest.approx(160.0, rel=1e-9)
    assert gradient_penalty(lambda x: float(np.sum(x ** 3)), batch, 0) == 0
    with pytest.raises(EmptyBatchError):
        gradient_penalty(AffineCritic(np.ones(2)), [], 10)


def test_gradient_penalty_nonnegative():
    rng = np.random.default_rng(2)
    for _ in range(20):
        w = rng.normal(size=3)
        critic = lambda x, w=w: float(np.sin(x @ w))  # noqa: E731
        assert gradient_penalty(critic, rng.random((4, 3)), 10) >= 0


def test_seg_consistency_examples():
    m = np.array([[1, 0], [0, 1]])
    assert seg_consistency_loss(m, m) == 0
    assert seg_consistency_loss(m, [[1, 0], [0, 0]]) == 0.25
    assert seg_consistency_loss(np.ones((3, 3)), np.zeros((3, 3))) == 1.0
    with pytest.raises(ShapeMismatchError):
        seg_consistency_loss(np.ones((2, 2)), np.ones((2, 3)))


def test_seg_consistency_is_a_metric():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b, c = (rng.random((6, 7)) < 0.4 for _ in range(3))
        ab, ba = seg_consistency_loss(a, b), seg_consistency_loss(b, a)
        assert ab == ba
        assert (ab == 0) == np.array_equal(a, b)
        assert seg_consistency_loss(a, c) <= ab + seg_consistency_loss(b, c) + 1e-15


def test_total_examples():
    br = total_loss(1.0, 0.5, 0.2, LossWeights(lambda_gp=10, lambda_seg=1))
    assert br.l_total == pytest.approx(6.2, abs=1e-12)
    assert total_loss(0, 0, 0).l_total == 0
    assert total_loss(0.7, 3.0, 9.0, LossWeights(0, 0)).l_total == 0.7


def test_total_identity_bit_exact():
    rng = np.random.default_rng(4)
    for _ in range(100):
        w = LossWeights(*rng.random(3) * 10)
        br = total_loss(*rng.normal(size=3), w)
        assert br.l_total == br.l_gan + w.lambda_gp * br.l_gp + w.lambda_seg * br.l_seg


def test_weights_nonnegative():
    with pytest.raises(ValueError):
        LossWeights(lambda_gp=-1)


def test_toy_fit_matches_closed_form():
    rng = np.random.default_rng(5)
    real = rng.normal(1.0, 0.1, size=(64, 2))
    fake = rng.normal(0.0, 0.1, size=(64, 2))
    lr, lam = 0.01, 10.0
    trace = toy_adversarial_fit(real, fake, steps=100, learning_rate=lr,
                                weights=LossWeights(lam=lam))
    delta = np.linalg.norm(real.mean(0) - fake.mean(0))
    expected = affine_gap_trace(delta, lam, lr, 100)
    got = [b.l_gan for b in trace]
    assert np.allclose(got, expected, rtol=1e-9, atol=1e-12)
    assert got[-1] > got[0]
    assert all(b >= a - 1e-6 for a, b in zip(got, got[1:]))


def test_toy_fit_equal_inputs():
    x = np.random.default_rng(6).random((10, 2))
    trace = toy_adversarial_fit(x, x.copy(), steps=50)
    assert max(abs(b.l_gan) for b in trace) <= 1e-6


def test_toy_fit_zero_steps():
    trace = toy_adversarial_fit([[1.0, 0.5]], [[0.0, 0.1]], steps=0)
    assert len(trace) == 1 and trace[0].l_gan == 0.0
    # zero critic has zero gradient: penalty lam * (0 - 1)^2
    assert trace[0].l_gp == pytest.approx(10.0)


def test_interpolate_between_endpoints():
    real, fake = np.ones((8, 3)), np.zeros((8, 3))
    x = interpolate(real, fake, seed=1)
    assert x.shape == (8, 3) and np.all((x >= 0) & (x <= 1))
    with pytest.raises(ShapeMismatchError):
        interpolate(np.ones((2, 3)), np.ones((3, 3)))


def test_image_features():
    img = np.array([[0.0, 1.0], [0.2, 0.8]])
    assert image_features(img).tolist() == [0.5, 0.5]
