from .autodiff import Tape, Var, backward
from .gradcheck import grad_check, max_relative_error, numeric_grad
from .kernels import (as_matrix, linear_forward, log_softmax, multi_head_attention,
                      scaled_dot_attention, softmax)
from .params import ParamStore, glorot_init, sgd_step
from .rng import Rng, splitmix64_next

__all__ = [
    "ParamStore", "Rng", "Tape", "Var", "as_matrix", "backward", "glorot_init", "grad_check",
    "linear_forward", "log_softmax", "max_relative_error", "multi_head_attention", "numeric_grad",
    "scaled_dot_attention", "sgd_step", "softmax", "splitmix64_next",
]
