"""The finite-difference auditor itself: passes, injected faults, edge cases."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psrl_lab.nn import (
    Dense,
    Network,
    ReLU,
    grad_check,
    mlp,
    mse,
    mse_grad,
)


def _mse_closure(net, x, target):
    def loss():
        pred = net.forward(x)
        value = mse(pred, target)
        net.backward(mse_grad(pred, target))
        return value

    return loss


def test_dense_relu_mse_passes_at_1e4():
    rng = np.random.default_rng(0)
    net = Network([Dense(5, 8, rng), ReLU(), Dense(8, 3, rng)])
    x = rng.normal(size=(6, 5))
    target = rng.normal(size=(6, 3))
    report = grad_check([net], _mse_closure(net, x, target), tolerance=1e-4)
    assert report.passed, report
    assert report.max_rel_error < 1e-4


def test_corrupted_gradient_reads_near_one():
    rng = np.random.default_rng(1)
    net = Network([Dense(4, 2, rng)])
    x = rng.normal(size=(3, 4))
    target = rng.normal(size=(3, 2))
    honest = _mse_closure(net, x, target)

    def corrupted():
        value = honest()
        net.params()[0].grad[0, 0] *= 2.0
        return value

    report = grad_check([net], corrupted, tolerance=1e-4)
    assert not report.passed
    assert abs(report.max_rel_error - 1.0) < 0.05
    assert "param 0 entry 0" in report.worst_location


def test_constant_loss_passes_with_zero_gradients():
    rng = np.random.default_rng(2)
    net = Network([Dense(3, 2, rng)])

    def loss():
        net.forward(np.zeros((1, 3)))
        return 7.25  # no backward: all gradients stay zero

    report = grad_check([net], loss, tolerance=1e-4)
    assert report.passed
    assert report.max_rel_error == 0.0
    assert report.loss_value == 7.25


def test_nonfinite_loss_fails_with_location():
    rng = np.random.default_rng(3)
    net = Network([Dense(2, 1, rng)])

    def loss():
        net.forward(np.ones((1, 2)))
        return float("nan")

    report = grad_check([net], loss, tolerance=1e-4)
    assert not report.passed
    assert "unperturbed" in report.worst_location


def test_tolerance_must_be_positive():
    net = Network([Dense(2, 1, np.random.default_rng(0))])
    with pytest.raises(ValueError):
        grad_check([net], lambda: 0.0, tolerance=0.0)


def test_multiple_networks_audited_jointly():
    rng = np.random.default_rng(4)
    a = mlp([3, 4], rng)
    b = mlp([4, 2], rng)
    x = rng.normal(size=(5, 3))
    target = rng.normal(size=(5, 2))

    def loss():
        hidden = a.forward(x)
        pred = b.forward(hidden)
        value = mse(pred, target)
        grad = mse_grad(pred, target)
        b.backward(grad)
        # chain into the upstream net through b's first layer
        a.backward(grad @ b.layers[0].weight.value.T)
        return value

    report = grad_check([a, b], loss, tolerance=1e-4)
    assert report.passed, report


@given(st.integers(0, 10_000))
@settings(max_examples=12, deadline=None)
def test_mlp_mse_gradients_pass_across_seeds(seed):
    rng = np.random.default_rng(seed)
    net = mlp([4, 6, 2], rng, hidden="tanh")
    x = rng.normal(size=(3, 4))
    target = rng.normal(size=(3, 2))
    report = grad_check([net], _mse_closure(net, x, target), tolerance=1e-4)
    assert report.passed, f"seed {seed}: {report}"


def test_grad_check_leaves_grads_zeroed():
    rng = np.random.default_rng(5)
    net = Network([Dense(3, 3, rng)])
    x = rng.normal(size=(2, 3))
    target = rng.normal(size=(2, 3))
    grad_check([net], _mse_closure(net, x, target), tolerance=1e-4)
    assert all(not p.grad.any() for p in net.params())
