"""Loss/distribution primitives against scalar-loop oracles and closed forms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psrl_lab.nn import (
    categorical_log_prob,
    categorical_log_prob_grad,
    gaussian_entropy_rows,
    gaussian_entropy_rows_grad,
    gaussian_log_prob,
    gaussian_log_prob_grads,
    log_softmax,
    mse,
    mse_grad,
    softmax,
    softmax_entropy,
    softmax_entropy_rows,
    softmax_entropy_rows_grad,
)


def test_mse_identical_is_zero():
    assert mse(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0])) == 0.0


def test_mse_hand_value():
    assert mse(np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 2.0


def test_mse_matches_scalar_loop():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(7, 3))
    b = rng.normal(size=(7, 3))
    total = 0.0
    for i in range(7):
        for j in range(3):
            total += (a[i, j] - b[i, j]) ** 2
    assert abs(mse(a, b) - total / 21.0) < 1e-12


def test_mse_shape_mismatch_raises():
    with pytest.raises(ValueError):
        mse(np.zeros(3), np.zeros(4))


def test_mse_grad_matches_finite_differences():
    rng = np.random.default_rng(1)
    pred = rng.normal(size=(4, 2))
    target = rng.normal(size=(4, 2))
    grad = mse_grad(pred, target)
    for idx in np.ndindex(pred.shape):
        orig = pred[idx]
        pred[idx] = orig + 1e-6
        up = mse(pred, target)
        pred[idx] = orig - 1e-6
        down = mse(pred, target)
        pred[idx] = orig
        assert abs(grad[idx] - (up - down) / 2e-6) < 1e-9


def test_entropy_uniform_logits_is_ln_n():
    assert abs(softmax_entropy(np.zeros(4)) - np.log(4.0)) < 1e-12


def test_entropy_near_deterministic_is_near_zero():
    h = softmax_entropy(np.array([1e6, 0.0, 0.0]))
    assert 0.0 <= h < 1e-9


def test_entropy_matches_scalar_loop():
    logits = np.array([1.0, 2.0, 3.0])
    p = softmax(logits)
    direct = -sum(float(pi) * float(np.log(pi)) for pi in p)
    assert abs(softmax_entropy(logits) - direct) < 1e-12


def test_entropy_requires_vector():
    with pytest.raises(ValueError):
        softmax_entropy(np.zeros((2, 2)))


@given(st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=8))
@settings(max_examples=200, deadline=None)
def test_softmax_simplex_and_entropy_bounds(logit_list):
    logits = np.array(logit_list)
    p = softmax(logits)
    assert abs(p.sum() - 1.0) < 1e-9
    assert (p >= 0.0).all()
    h = softmax_entropy(logits)
    assert -1e-12 <= h <= np.log(len(logit_list)) + 1e-12


def test_softmax_stable_under_huge_logits():
    p = softmax(np.array([1e308, 1e308]))
    assert np.allclose(p, [0.5, 0.5])


def test_log_softmax_consistent_with_softmax():
    rng = np.random.default_rng(6)
    logits = rng.normal(size=(5, 4)) * 10.0
    assert np.allclose(np.exp(log_softmax(logits)), softmax(logits), atol=1e-12)


def test_categorical_log_prob_values():
    logits = np.log(np.array([[0.1, 0.2, 0.7], [0.5, 0.25, 0.25]]))
    lp = categorical_log_prob(logits, np.array([2, 0]))
    assert np.allclose(lp, np.log([0.7, 0.5]))


def _fd_logits(fn, logits, tol=1e-7):
    """Central-difference check of an (logits -> scalar) gradient pair."""
    value_fn, grad = fn
    for idx in np.ndindex(logits.shape):
        orig = logits[idx]
        logits[idx] = orig + 1e-6
        up = value_fn(logits)
        logits[idx] = orig - 1e-6
        down = value_fn(logits)
        logits[idx] = orig
        fd = (up - down) / 2e-6
        assert abs(grad[idx] - fd) < tol, f"entry {idx}: {grad[idx]} vs {fd}"


def test_categorical_log_prob_grad_matches_fd():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(5, 3))
    actions = rng.integers(0, 3, size=5)
    upstream = rng.normal(size=5)
    grad = categorical_log_prob_grad(logits, actions, upstream)
    _fd_logits(
        (lambda z: float((upstream * categorical_log_prob(z, actions)).sum()), grad),
        logits)


def test_entropy_rows_grad_matches_fd():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(4, 5))
    upstream = rng.normal(size=4)
    grad = softmax_entropy_rows_grad(logits, upstream)
    _fd_logits(
        (lambda z: float((upstream * softmax_entropy_rows(z)).sum()), grad),
        logits)


def test_gaussian_log_prob_standard_normal_at_mean():
    lp = gaussian_log_prob(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)))
    assert abs(lp[0] - (-np.log(2.0 * np.pi))) < 1e-12


def test_gaussian_log_prob_matches_scalar_formula():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(6, 2))
    mu = rng.normal(size=(6, 2))
    log_std = rng.normal(size=(6, 2)) * 0.3
    lp = gaussian_log_prob(a, mu, log_std)
    for i in range(6):
        direct = 0.0
        for j in range(2):
            sigma = np.exp(log_std[i, j])
            direct += (-0.5 * ((a[i, j] - mu[i, j]) / sigma) ** 2
                       - np.log(sigma) - 0.5 * np.log(2.0 * np.pi))
        assert abs(lp[i] - direct) < 1e-12


def test_gaussian_grads_match_fd():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 2))
    mu = rng.normal(size=(4, 2))
    log_std = rng.normal(size=(4, 2)) * 0.2
    upstream = rng.normal(size=4)
    dmu, dls = gaussian_log_prob_grads(a, mu, log_std, upstream)

    def total(m, ls):
        return float((upstream * gaussian_log_prob(a, m, ls)).sum())

    for idx in np.ndindex(mu.shape):
        orig = mu[idx]
        mu[idx] = orig + 1e-6
        up = total(mu, log_std)
        mu[idx] = orig - 1e-6
        down = total(mu, log_std)
        mu[idx] = orig
        assert abs(dmu[idx] - (up - down) / 2e-6) < 1e-7
    for idx in np.ndindex(log_std.shape):
        orig = log_std[idx]
        log_std[idx] = orig + 1e-6
        up = total(mu, log_std)
        log_std[idx] = orig - 1e-6
        down = total(mu, log_std)
        log_std[idx] = orig
        assert abs(dls[idx] - (up - down) / 2e-6) < 1e-7


def test_gaussian_entropy_and_grad():
    log_std = np.array([[0.0, 0.5], [-0.3, 0.1]])
    h = gaussian_entropy_rows(log_std)
    # closed form: sum_j log sigma_j + d/2 (log 2 pi + 1)
    expected0 = 0.5 + 2.0 * 0.5 * (np.log(2.0 * np.pi) + 1.0)
    assert abs(h[0] - expected0) < 1e-12
    upstream = np.array([2.0, -1.0])
    g = gaussian_entropy_rows_grad(log_std, upstream)
    assert np.array_equal(g, np.array([[2.0, 2.0], [-1.0, -1.0]]))
