"""Reverse-mode correctness: finite differences, hand-derived cases, determinism."""

import numpy as np
import pytest

from dscjscc import autodiff as ad
from dscjscc.autodiff import (DIFFERENTIABLE_OPS, AutodiffError, Tensor,
                              finite_diff_check, gradcheck)

rng = np.random.default_rng(42)


@pytest.mark.parametrize("op", DIFFERENTIABLE_OPS)
def test_finite_diff_all_primitives(op):
    report = finite_diff_check(op, trials=10, seed=7)
    assert report.max_rel_error < 1e-4, f"{op}: {report.per_input}"


def test_finite_diff_is_deterministic():
    a = finite_diff_check("conv2d", trials=3, seed=11)
    b = finite_diff_check("conv2d", trials=3, seed=11)
    assert a.per_input == b.per_input


def test_prelu_away_from_kink_is_tight():
    assert finite_diff_check("prelu", trials=8, seed=3).max_rel_error < 1e-6


def test_sigmoid_is_tight():
    assert finite_diff_check("sigmoid", trials=8, seed=3).max_rel_error < 1e-6


def test_unknown_primitive_rejected():
    with pytest.raises(ValueError, match="unknown primitive"):
        finite_diff_check("softmax", trials=1, seed=0)


def test_conv_weight_gradient_analytic():
    # sum of conv output w.r.t. a 1x1 all-ones kernel on constant input
    v = 3.5
    x = Tensor(np.full((1, 1, 4, 6), v))
    w = Tensor(np.ones((1, 1, 1, 1)), requires_grad=True)
    out = ad.conv2d(x, w, None, 1, 0)
    ad.sum_all(out).backward()
    assert w.grad[0, 0, 0, 0] == pytest.approx(4 * 6 * v)


def test_identity_pointwise_passes_upstream_gradient():
    x = Tensor(rng.standard_normal((2, 3, 4, 4)), requires_grad=True)
    w = Tensor(np.eye(3).reshape(3, 3, 1, 1))
    y = ad.pointwise_conv2d(x, w, None)
    g = rng.standard_normal(y.data.shape)
    y.backward(g)
    np.testing.assert_array_equal(x.grad, g)


def test_backward_without_graph_raises():
    t = Tensor(np.ones((2, 2)))
    with pytest.raises(AutodiffError, match="no recorded graph"):
        t.backward()


def test_backward_needs_scalar_or_upstream():
    x = Tensor(rng.standard_normal((1, 1, 3, 3)), requires_grad=True)
    y = ad.sigmoid(x)
    with pytest.raises(AutodiffError, match="scalar"):
        y.backward()


def test_upstream_shape_mismatch_rejected():
    x = Tensor(rng.standard_normal((1, 1, 3, 3)), requires_grad=True)
    y = ad.sigmoid(x)
    with pytest.raises(AutodiffError, match="shape"):
        y.backward(np.ones((1, 1, 2, 2)))


def test_gradients_accumulate_across_reuse():
    x = Tensor(np.full((1, 1, 2, 2), 2.0), requires_grad=True)
    y = ad.scale(x, 3.0)
    z = ad.scale(x, 5.0)
    total = ad.sum_all(ad.add_constant(y, np.zeros_like(y.data)))
    total2 = ad.sum_all(z)
    total.backward()
    total2.backward()
    np.testing.assert_allclose(x.grad, np.full((1, 1, 2, 2), 8.0))


def test_power_normalize_zero_norm_rejected():
    z = Tensor(np.zeros((1, 4)))
    with pytest.raises(ValueError, match="zero-norm"):
        ad.power_normalize(z, 2, 1.0)


def test_gradcheck_on_composed_graph():
    x = rng.standard_normal((1, 2, 5, 5))
    w1 = rng.standard_normal((3, 2, 3, 3)) * 0.4
    w2 = rng.standard_normal((2, 3, 1, 1)) * 0.4

    def build(t):
        h = ad.conv2d(t["x"], t["w1"], None, 2, 1)
        h = ad.sigmoid(h)
        h = ad.pointwise_conv2d(h, t["w2"], None)
        return ad.sum_all(h)

    errs = gradcheck(build, {"x": x, "w1": w1, "w2": w2})
    assert max(errs.values()) < 1e-6


def test_forward_is_bitwise_deterministic():
    x = rng.standard_normal((2, 3, 8, 8))
    w = rng.standard_normal((4, 3, 5, 5))
    a = ad.conv2d(Tensor(x), Tensor(w), None, 2, 2).data
    b = ad.conv2d(Tensor(x.copy()), Tensor(w.copy()), None, 2, 2).data
    np.testing.assert_array_equal(a, b)
