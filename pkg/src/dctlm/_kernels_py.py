"""Pure numpy versions of the LSTM pointwise kernels.

Gate layout along the last axis is ``[input, forget, output, candidate]``,
each block ``n`` wide.
"""
import numpy as np


def lstm_pointwise_forward(pre, c_prev):
    """Activate gate pre-activations and advance the cell.

    Returns ``(act, c, tanh_c, h)``; ``act`` holds the activated gates.
    """
    n = c_prev.shape[1]
    act = np.empty_like(pre)
    act[:, :3 * n] = 0.5 * (np.tanh(0.5 * pre[:, :3 * n]) + 1.0)
    act[:, 3 * n:] = np.tanh(pre[:, 3 * n:])
    i, f, o, z = act[:, :n], act[:, n:2 * n], act[:, 2 * n:3 * n], act[:, 3 * n:]
    c = f * c_prev + i * z
    tc = np.tanh(c)
    return act, c, tc, o * tc


def lstm_pointwise_backward(act, c_prev, tc, dh, dc):
    """Gradients w.r.t. the gate pre-activations and the previous cell."""
    n = c_prev.shape[1]
    i, f, o, z = act[:, :n], act[:, n:2 * n], act[:, 2 * n:3 * n], act[:, 3 * n:]
    dct = dc + dh * o * (1.0 - tc * tc)
    dpre = np.empty_like(act)
    dpre[:, :n] = dct * z * i * (1.0 - i)
    dpre[:, n:2 * n] = dct * c_prev * f * (1.0 - f)
    dpre[:, 2 * n:3 * n] = dh * tc * o * (1.0 - o)
    dpre[:, 3 * n:] = dct * i * (1.0 - z * z)
    return dpre, dct * f
