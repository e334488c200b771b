"""Dense linear algebra, layer forwards, reverse-mode gradients, and SGD."""

from hintguess.numerics.gradcheck import grad_check
from hintguess.numerics.layers import (
    SCALE_BY_INPUT_COUNT,
    SCALE_BY_KEY_DIM,
    AttentionSpec,
    ParameterSet,
    add_attention,
    add_linear,
    add_mlp,
    cross_attention,
    cross_attention_t,
    mlp_forward,
    mlp_forward_t,
    self_attention,
    self_attention_t,
    sgd_step,
)
from hintguess.numerics.tensor import Tensor, backward, constant, mse_loss, parameter

__all__ = [
    "AttentionSpec",
    "ParameterSet",
    "Tensor",
    "SCALE_BY_KEY_DIM",
    "SCALE_BY_INPUT_COUNT",
    "add_attention",
    "add_linear",
    "add_mlp",
    "backward",
    "constant",
    "cross_attention",
    "cross_attention_t",
    "grad_check",
    "mlp_forward",
    "mlp_forward_t",
    "mse_loss",
    "parameter",
    "self_attention",
    "self_attention_t",
    "sgd_step",
]
