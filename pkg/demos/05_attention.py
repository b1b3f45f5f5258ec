"""
Attention numerics, checked two ways
====================================

"""

# scaled dot-product attention on a worked 2x2 example
import numpy as np
from algolisp import (
    GateParams,
    attention_weights,
    gated_cross_attention,
    grad_check,
    scaled_dot_attention,
)

q = np.array([[1.0, 0.0], [0.0, 1.0]])
k = np.array([[1.0, 1.0], [0.0, 1.0]])
v = np.array([[1.0, 2.0], [3.0, 4.0]])

w = attention_weights(q, k)
print("weights\n", w)
print("rows sum to", w.sum(axis=1))
print("attended\n", scaled_dot_attention(q, k, v))

# the gate interpolates: zeroed gate projections pass half the information term
params = GateParams(np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2), np.eye(2),
                    np.zeros(2), np.zeros(2))
print("half of q + v\n", gated_cross_attention(q, v, params))

# analytic gradients agree with central finite differences
rng = np.random.default_rng(0)
err = grad_check("gca", {"q": rng.standard_normal((4, 8)),
                         "f": rng.standard_normal((4, 8))},
                 params=GateParams.random(8, seed=1))
print("max relative gradient error", err)
