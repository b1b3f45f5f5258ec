"""Reference attention numerics: scaled dot-product attention, cross
attention in both orientations, the sigmoid-gated variant, and analytic
backward passes validated by central finite differences.

Everything is double precision, pure, and free of any training machinery.
Row-major convention throughout: a sequence of n vectors is an n×d matrix,
and affine maps are applied as x @ W + b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    """Matrix shapes do not agree for the requested operation."""


class NonFiniteInput(ValueError):
    """An input contains NaN or infinity."""


class NonFiniteGradient(ValueError):
    """A computed gradient contains NaN or infinity."""


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteInput(f"{name} contains non-finite entries")
    return arr


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteInput(f"{name} contains non-finite entries")
    return arr


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def attention_weights(q, k) -> np.ndarray:
    """Row-stochastic attention matrix softmax(QKᵀ/√d), max-stabilized."""
    Q = _as_matrix(q, "Q")
    K = _as_matrix(k, "K")
    if Q.shape[1] != K.shape[1]:
        raise DimensionMismatch(
            f"Q and K must share the model dimension, got {Q.shape} and {K.shape}"
        )
    scores = (Q @ K.T) / np.sqrt(Q.shape[1])
    return _softmax_rows(scores)


def scaled_dot_attention(q, k, v) -> np.ndarray:
    """softmax(QKᵀ/√d) V for pre-projected Q (n×d), K (m×d), V (m×dv)."""
    V = _as_matrix(v, "V")
    K = _as_matrix(k, "K")
    if V.shape[0] != K.shape[0]:
        raise DimensionMismatch(
            f"K and V must have the same number of rows, got {K.shape} and {V.shape}"
        )
    return attention_weights(q, K) @ V


def cross_attention(encoder, decoder, orientation: str = "as-printed") -> np.ndarray:
    """Attention between the two sequence sides.

    "as-printed" queries with the encoder side against decoder keys/values
    (output is n_enc×d); "standard" queries with the decoder side against
    encoder keys/values (output is n_dec×d).
    """
    if orientation == "as-printed":
        return scaled_dot_attention(encoder, decoder, decoder)
    if orientation == "standard":
        return scaled_dot_attention(decoder, encoder, encoder)
    raise ValueError(f"orientation must be 'as-printed' or 'standard', got {orientation!r}")


def self_attention(x) -> np.ndarray:
    """Attention of a sequence against itself: scaled_dot_attention(X, X, X)."""
    return scaled_dot_attention(x, x, x)


@dataclass(frozen=True)
class GateParams:
    """The six gated-attention parameters: gate and information projections
    for the query and attended inputs, plus their biases."""

    w_qg: np.ndarray
    w_vg: np.ndarray
    w_qi: np.ndarray
    w_vi: np.ndarray
    b_g: np.ndarray
    b_i: np.ndarray

    def __post_init__(self) -> None:
        w_qg = _as_matrix(self.w_qg, "w_qg")
        d = w_qg.shape[0]
        object.__setattr__(self, "w_qg", w_qg)
        for name in ("w_vg", "w_qi", "w_vi"):
            m = _as_matrix(getattr(self, name), name)
            if m.shape != (d, d):
                raise DimensionMismatch(f"{name} must be {d}x{d}, got {m.shape}")
            object.__setattr__(self, name, m)
        for name in ("b_g", "b_i"):
            b = _as_vector(getattr(self, name), name)
            if b.shape != (d,):
                raise DimensionMismatch(f"{name} must have length {d}, got {b.shape}")
            object.__setattr__(self, name, b)

    @property
    def dim(self) -> int:
        return self.w_qg.shape[0]

    @classmethod
    def random(cls, d: int, seed: int = 0, scale: float | None = None) -> "GateParams":
        """Seeded uniform(−1/√d, 1/√d) initialization."""
        rng = np.random.default_rng(seed)
        s = scale if scale is not None else 1.0 / np.sqrt(d)

        def mat():
            return rng.uniform(-s, s, size=(d, d))

        return cls(mat(), mat(), mat(), mat(),
                   rng.uniform(-s, s, size=d), rng.uniform(-s, s, size=d))


def gated_cross_attention(q_enc, f_ca, params: GateParams) -> np.ndarray:
    """σ(Q W_qg + F W_vg + b_g) ⊙ (Q W_qi + F W_vi + b_i), biases broadcast
    over rows; the gate keeps every output entry within the information
    projection's magnitude."""
    Q = _as_matrix(q_enc, "q_enc")
    F = _as_matrix(f_ca, "f_ca")
    d = params.dim
    if Q.shape[1] != d or F.shape != Q.shape:
        raise DimensionMismatch(
            f"q_enc {Q.shape} and f_ca {F.shape} must both be n x {d}"
        )
    gate = _sigmoid(Q @ params.w_qg + F @ params.w_vg + params.b_g)
    info = Q @ params.w_qi + F @ params.w_vi + params.b_i
    return gate * info


# ---------------------------------------------------------------------------
# analytic backward passes (loss gradients for an upstream dOut)


def sda_backward(q, k, v, d_out) -> dict[str, np.ndarray]:
    """Gradients of scaled_dot_attention w.r.t. Q, K, V for upstream d_out."""
    Q = _as_matrix(q, "Q")
    K = _as_matrix(k, "K")
    V = _as_matrix(v, "V")
    dO = _as_matrix(d_out, "d_out")
    scale = 1.0 / np.sqrt(Q.shape[1])
    A = _softmax_rows((Q @ K.T) * scale)
    dV = A.T @ dO
    dA = dO @ V.T
    # softmax Jacobian applied row-wise
    dS = A * (dA - (dA * A).sum(axis=1, keepdims=True))
    dQ = (dS @ K) * scale
    dK = (dS.T @ Q) * scale
    return {"q": dQ, "k": dK, "v": dV}


def gca_backward(q_enc, f_ca, params: GateParams, d_out) -> dict[str, np.ndarray]:
    """Gradients of gated_cross_attention w.r.t. both inputs and all six
    parameters for upstream d_out."""
    Q = _as_matrix(q_enc, "q_enc")
    F = _as_matrix(f_ca, "f_ca")
    dO = _as_matrix(d_out, "d_out")
    gate = _sigmoid(Q @ params.w_qg + F @ params.w_vg + params.b_g)
    info = Q @ params.w_qi + F @ params.w_vi + params.b_i
    d_gate = dO * info
    d_info = dO * gate
    d_zg = d_gate * gate * (1.0 - gate)
    return {
        "q": d_zg @ params.w_qg.T + d_info @ params.w_qi.T,
        "f": d_zg @ params.w_vg.T + d_info @ params.w_vi.T,
        "w_qg": Q.T @ d_zg,
        "w_vg": F.T @ d_zg,
        "w_qi": Q.T @ d_info,
        "w_vi": F.T @ d_info,
        "b_g": d_zg.sum(axis=0),
        "b_i": d_info.sum(axis=0),
    }


def grad_check(
    op: str,
    inputs: dict[str, np.ndarray],
    params: GateParams | None = None,
    eps: float = 1e-4,
) -> float:
    """Worst relative disagreement between analytic gradients and central
    finite differences, for the scalar loss sum(output).

    ``op`` is "sda" (inputs q, k, v) or "gca" (inputs q, f plus params).
    The error is |analytic − numeric| / max(|analytic|, |numeric|, 1), i.e.
    relative for large gradients and absolute near zero.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")

    if op == "sda":
        tensors = {name: _as_matrix(inputs[name], name).copy() for name in ("q", "k", "v")}

        def forward() -> float:
            return float(scaled_dot_attention(tensors["q"], tensors["k"], tensors["v"]).sum())

        out_shape = (tensors["q"].shape[0], tensors["v"].shape[1])
        analytic = sda_backward(
            tensors["q"], tensors["k"], tensors["v"], np.ones(out_shape)
        )
    elif op == "gca":
        if params is None:
            raise ValueError("gca gradient check needs GateParams")
        tensors = {name: _as_matrix(inputs[name], name).copy() for name in ("q", "f")}
        tensors.update(
            w_qg=params.w_qg.copy(), w_vg=params.w_vg.copy(),
            w_qi=params.w_qi.copy(), w_vi=params.w_vi.copy(),
            b_g=params.b_g.copy(), b_i=params.b_i.copy(),
        )

        def forward() -> float:
            p = GateParams(tensors["w_qg"], tensors["w_vg"], tensors["w_qi"],
                           tensors["w_vi"], tensors["b_g"], tensors["b_i"])
            return float(gated_cross_attention(tensors["q"], tensors["f"], p).sum())

        analytic = gca_backward(
            tensors["q"], tensors["f"], params, np.ones(tensors["q"].shape)
        )
    else:
        raise ValueError(f"op must be 'sda' or 'gca', got {op!r}")

    worst = 0.0
    for name, grad in analytic.items():
        if not np.isfinite(grad).all():
            raise NonFiniteGradient(f"analytic gradient for {name} is non-finite")
        tensor = tensors[name]
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = tensor[idx]
            tensor[idx] = orig + eps
            f_plus = forward()
            tensor[idx] = orig - eps
            f_minus = forward()
            tensor[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(np.asarray(grad)[idx])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1.0)
            if err > worst:
                worst = err
    return worst
