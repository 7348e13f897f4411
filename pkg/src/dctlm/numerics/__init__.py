"""Dense array arithmetic with a tape-based reverse-mode autodiff engine."""
from .config import debug_enabled, get_dtype, precision, set_debug, set_dtype
from .ops import (add, add_bias, bmv, concat, cross_entropy, elementwise,
                  gather_rows, matmul, mul, reshape, scale, select, sigmoid,
                  sigmoid_array, slice_last, stack, tanh, transpose)
from .ops import sum as sum_
from .rng import Rng, derive_seed
from .tape import (ArityError, Context, DimensionError, Op, Parameter, Tape,
                   Tensor, active_tape, backward, get_op, recording,
                   register_custom_op)

__all__ = [
    "ArityError", "Context", "DimensionError", "Op", "Parameter", "Rng",
    "Tape", "Tensor", "active_tape", "add", "add_bias", "backward", "bmv",
    "concat", "cross_entropy", "debug_enabled", "derive_seed", "elementwise",
    "gather_rows", "get_dtype", "get_op", "matmul", "mul", "precision",
    "recording", "register_custom_op", "reshape", "scale", "select",
    "set_debug", "set_dtype", "sigmoid", "sigmoid_array", "slice_last",
    "stack", "sum_", "tanh", "transpose",
]
