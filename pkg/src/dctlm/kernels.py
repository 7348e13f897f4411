"""Hot-loop kernels, compiled when available.

The Cython extension is used if it was built; set ``DCTLM_PURE_PYTHON=1``
to force the numpy fallback.  ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("DCTLM_PURE_PYTHON", "") not in ("", "0"):
    _ext = None
else:
    try:
        from . import _ext
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "numpy"
_impl = _ext if _ext is not None else _kernels_py


def _c(a):
    return np.ascontiguousarray(a)


def lstm_pointwise_forward(pre, c_prev):
    return _impl.lstm_pointwise_forward(_c(pre), _c(c_prev))


def lstm_pointwise_backward(act, c_prev, tc, dh, dc):
    return _impl.lstm_pointwise_backward(_c(act), _c(c_prev), _c(tc), _c(dh), _c(dc))
