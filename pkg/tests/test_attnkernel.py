"""Attention numerics tests with high-precision and straight-line oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from algolisp.attnkernel import (
    DimensionMismatch,
    GateParams,
    NonFiniteInput,
    attention_weights,
    cross_attention,
    gated_cross_attention,
    gca_backward,
    grad_check,
    scaled_dot_attention,
    sda_backward,
    self_attention,
)

# softmax([1/sqrt(2), 0]) applied to V=[[1,2],[3,4]], evaluated with 50-digit
# arithmetic and rounded to double precision.
TWO_BY_TWO = np.array([
    [1.6604769013466861488, 2.6604769013466861488],
    [2.3395230986533138512, 3.3395230986533138512],
])


def test_two_by_two_identity_queries():
    out = scaled_dot_attention(np.eye(2), np.eye(2), [[1.0, 2.0], [3.0, 4.0]])
    assert np.max(np.abs(out - TWO_BY_TWO)) < 1e-12


def test_single_key_attends_fully():
    Q = np.array([[0.3, -2.0], [5.0, 1.0], [0.0, 0.0]])
    K = np.array([[0.7, 0.1]])
    V = np.array([[4.0, -1.0]])
    out = scaled_dot_attention(Q, K, V)
    assert np.allclose(out, np.tile(V, (3, 1)), atol=1e-15)


def test_zero_queries_average_values():
    rng = np.random.default_rng(0)
    V = rng.normal(size=(5, 3))
    out = scaled_dot_attention(np.zeros((2, 4)), rng.normal(size=(5, 4)) * 0 + 1.0, V)
    assert np.allclose(out, np.tile(V.mean(axis=0), (2, 1)), atol=1e-14)


def test_rows_are_stochastic():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n, m, d = rng.integers(1, 9), rng.integers(1, 9), rng.integers(1, 17)
        A = attention_weights(rng.normal(size=(n, d)), rng.normal(size=(m, d)))
        assert np.all(A >= 0)
        assert np.max(np.abs(A.sum(axis=1) - 1.0)) < 1e-12


def test_softmax_shift_invariance():
    rng = np.random.default_rng(7)
    # d=1 with unit queries: shifting K shifts every score row by the same
    # constant, which must not move the output.
    Q = np.ones((4, 1))
    K = rng.normal(size=(6, 1))
    V = rng.normal(size=(6, 3))
    base = scaled_dot_attention(Q, K, V)
    shifted = scaled_dot_attention(Q, K + 123.456, V)
    assert np.max(np.abs(base - shifted)) < 1e-12


def test_extreme_scores_stay_finite():
    out = scaled_dot_attention([[1000.0]], [[1000.0]], [[2.0]])
    assert np.isfinite(out).all()
    assert out[0, 0] == 2.0


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        scaled_dot_attention(np.eye(2), np.eye(3), np.eye(3))
    with pytest.raises(DimensionMismatch):
        scaled_dot_attention(np.eye(2), np.eye(2), np.ones((3, 2)))
    with pytest.raises(DimensionMismatch):
        attention_weights(np.ones(3), np.eye(3))


def test_non_finite_rejected():
    bad = np.array([[np.nan, 1.0]])
    with pytest.raises(NonFiniteInput):
        scaled_dot_attention(bad, np.ones((1, 2)), np.ones((1, 2)))


def test_cross_attention_orientations():
    rng = np.random.default_rng(5)
    enc = rng.normal(size=(4, 6))
    dec = rng.normal(size=(7, 6))
    printed = cross_attention(enc, dec)
    standard = cross_attention(enc, dec, orientation="standard")
    assert printed.shape == (4, 6)
    assert standard.shape == (7, 6)
    # the two orientations are the same computation with the sides swapped
    assert np.array_equal(standard, cross_attention(dec, enc, orientation="as-printed"))
    with pytest.raises(ValueError):
        cross_attention(enc, dec, orientation="sideways")


def test_self_attention_is_sda_of_itself():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(5, 4))
    assert np.array_equal(self_attention(X), scaled_dot_attention(X, X, X))


# -- gated cross attention ----------------------------------------------------


def _params(d, seed=0):
    return GateParams.random(d, seed=seed)


def test_zero_gate_halves_information():
    d = 4
    rng = np.random.default_rng(1)
    p = GateParams(
        np.zeros((d, d)), np.zeros((d, d)),
        rng.normal(size=(d, d)), rng.normal(size=(d, d)),
        np.zeros(d), rng.normal(size=d),
    )
    Q = rng.normal(size=(3, d))
    F = rng.normal(size=(3, d))
    info = Q @ p.w_qi + F @ p.w_vi + p.b_i
    out = gated_cross_attention(Q, F, p)
    assert np.allclose(out, 0.5 * info, atol=1e-15)


def test_identity_information_exposes_gate():
    d = 3
    rng = np.random.default_rng(2)
    p = GateParams(
        rng.normal(size=(d, d)), rng.normal(size=(d, d)),
        np.zeros((d, d)), np.zeros((d, d)),
        rng.normal(size=d), np.ones(d),
    )
    out = gated_cross_attention(rng.normal(size=(4, d)), rng.normal(size=(4, d)), p)
    assert np.all(out > 0.0) and np.all(out < 1.0)


def test_matches_straight_line_oracle():
    d = 4
    rng = np.random.default_rng(3)
    p = _params(d, seed=11)
    Q = rng.normal(size=(3, d))
    F = rng.normal(size=(3, d))
    expected = np.zeros((3, d))
    for i in range(3):
        for j in range(d):
            zg = p.b_g[j]
            zi = p.b_i[j]
            for t in range(d):
                zg += Q[i, t] * p.w_qg[t, j] + F[i, t] * p.w_vg[t, j]
                zi += Q[i, t] * p.w_qi[t, j] + F[i, t] * p.w_vi[t, j]
            expected[i, j] = (1.0 / (1.0 + math.exp(-zg))) * zi
    got = gated_cross_attention(Q, F, p)
    denom = np.maximum(np.abs(expected), 1.0)
    assert np.max(np.abs(got - expected) / denom) < 1e-12


def test_gate_bounds_output_by_information():
    d = 5
    rng = np.random.default_rng(4)
    p = _params(d, seed=12)
    Q = rng.normal(size=(6, d))
    F = rng.normal(size=(6, d))
    info = Q @ p.w_qi + F @ p.w_vi + p.b_i
    out = gated_cross_attention(Q, F, p)
    assert np.all(np.abs(out) <= np.abs(info) + 1e-15)
    assert np.all(np.sign(out) == np.sign(info))


def test_saturated_gate_passes_information_through():
    d = 4
    rng = np.random.default_rng(6)
    p = GateParams(
        np.zeros((d, d)), np.zeros((d, d)),
        rng.normal(size=(d, d)), rng.normal(size=(d, d)),
        np.full(d, 60.0),  # sigmoid(60) rounds to exactly 1.0 in float64
        rng.normal(size=d),
    )
    Q = rng.normal(size=(3, d))
    F = rng.normal(size=(3, d))
    info = Q @ p.w_qi + F @ p.w_vi + p.b_i
    assert np.array_equal(gated_cross_attention(Q, F, p), info)


def test_gate_params_validate_shapes():
    with pytest.raises(DimensionMismatch):
        GateParams(np.eye(3), np.eye(2), np.eye(3), np.eye(3), np.zeros(3), np.zeros(3))
    with pytest.raises(DimensionMismatch):
        GateParams(np.eye(3), np.eye(3), np.eye(3), np.eye(3), np.zeros(4), np.zeros(3))


def test_gate_params_random_is_seeded_and_scaled():
    a = GateParams.random(8, seed=5)
    b = GateParams.random(8, seed=5)
    assert np.array_equal(a.w_qg, b.w_qg) and np.array_equal(a.b_i, b.b_i)
    assert a.dim == 8
    bound = 1.0 / math.sqrt(8)
    for m in (a.w_qg, a.w_vg, a.w_qi, a.w_vi):
        assert np.max(np.abs(m)) <= bound


def test_gca_input_shape_checked():
    p = _params(4)
    with pytest.raises(DimensionMismatch):
        gated_cross_attention(np.ones((2, 3)), np.ones((2, 3)), p)
    with pytest.raises(DimensionMismatch):
        gated_cross_attention(np.ones((2, 4)), np.ones((3, 4)), p)


# -- gradients -----------------------------------------------------------------


def test_single_cell_value_gradient_is_one():
    grads = sda_backward([[0.5]], [[0.2]], [[3.0]], [[1.0]])
    assert grads["v"][0, 0] == 1.0
    # a 1x1 softmax is constant, so score gradients vanish
    assert grads["q"][0, 0] == 0.0
    assert grads["k"][0, 0] == 0.0


def test_grad_check_sda():
    rng = np.random.default_rng(10)
    inputs = {
        "q": rng.normal(size=(3, 5)),
        "k": rng.normal(size=(4, 5)),
        "v": rng.normal(size=(4, 2)),
    }
    assert grad_check("sda", inputs, eps=1e-4) < 1e-5


def test_grad_check_gca():
    rng = np.random.default_rng(11)
    inputs = {"q": rng.normal(size=(4, 8)), "f": rng.normal(size=(4, 8))}
    assert grad_check("gca", inputs, params=_params(8, seed=21), eps=1e-4) < 1e-5


def test_grad_check_with_saturated_gate_is_linear():
    d = 4
    rng = np.random.default_rng(12)
    p = GateParams(
        np.zeros((d, d)), np.zeros((d, d)),
        rng.normal(size=(d, d)), rng.normal(size=(d, d)),
        np.full(d, 60.0), rng.normal(size=d),
    )
    inputs = {"q": rng.normal(size=(2, d)), "f": rng.normal(size=(2, d))}
    # the function is exactly linear in q and f here
    grads = gca_backward(inputs["q"], inputs["f"], p, np.ones((2, d)))
    assert np.allclose(grads["q"], np.tile(p.w_qi.sum(axis=1), (2, 1)), atol=1e-12)
    assert grad_check("gca", inputs, params=p, eps=1e-4) < 1e-5


def test_grad_check_validates_arguments():
    with pytest.raises(ValueError):
        grad_check("sda", {"q": np.eye(2), "k": np.eye(2), "v": np.eye(2)}, eps=0.5)
    with pytest.raises(ValueError):
        grad_check("qkv", {})
    with pytest.raises(ValueError):
        grad_check("gca", {"q": np.eye(2), "f": np.eye(2)})
