"""Process-wide numeric settings: working float type and debug checks."""
from __future__ import annotations

import contextlib

import numpy as np

_DTYPES = {"float64": np.float64, "float32": np.float32}
_state = {"dtype": np.float64, "debug": False}


def get_dtype():
    return _state["dtype"]


def set_dtype(dtype) -> None:
    if isinstance(dtype, str):
        if dtype not in _DTYPES:
            raise ValueError(f"unsupported dtype {dtype!r}")
        dtype = _DTYPES[dtype]
    dtype = np.dtype(dtype).type
    if dtype not in (np.float64, np.float32):
        raise ValueError(f"unsupported dtype {dtype!r}")
    _state["dtype"] = dtype


@contextlib.contextmanager
def precision(dtype):
    old = _state["dtype"]
    set_dtype(dtype)
    try:
        yield
    finally:
        _state["dtype"] = old


def debug_enabled() -> bool:
    return _state["debug"]


def set_debug(flag: bool) -> None:
    """Check every operation output for NaN/Inf when enabled."""
    _state["debug"] = bool(flag)
