"""Central finite differences, kept independent of the autodiff engine."""
import numpy as np

from dctlm.numerics import backward, recording


def numeric_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """d f / d x by central differences; ``f`` reads ``x`` in place."""
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + eps
        up = float(f())
        flat[k] = old - eps
        down = float(f())
        flat[k] = old
        grad.reshape(-1)[k] = (up - down) / (2 * eps)
    return grad


def rel_error(analytic, numeric) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(float(np.abs(numeric).max(initial=0.0)), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0)) / scale


def check_params(loss_fn, params, eps: float = 1e-5) -> dict:
    """Relative error per parameter between tape gradients and differences.

    ``loss_fn()`` must build the graph from the parameters and return a
    scalar tensor.
    """
    with recording() as tape:
        loss = loss_fn()
    grads = backward(tape, loss)
    out = {}
    for p in params:
        num = numeric_grad(lambda: loss_fn().value, p.value, eps)
        out[p.name] = rel_error(grads.get(p, np.zeros_like(p.value)), num)
    return out
