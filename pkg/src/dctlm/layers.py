"""Embedding, dense and DCT-encoded LSTM layers, dropout and the LM loss.

LSTM gates are stacked along the first weight axis in the order input,
forget, output, candidate.  A layer with input size ``m`` and hidden size
``n`` holds ``W`` (4n x m), ``R`` (4n x n) and a bias of length 4n.
"""
from __future__ import annotations

import math

import numpy as np

from . import codec, kernels
from .numerics import (DimensionError, Op, Parameter, Rng, add, add_bias,
                       concat, config,
                       cross_entropy, gather_rows, matmul, mul, reshape,
                       sigmoid, slice_last, tanh, transpose)

GATES = ("i", "f", "o", "z")
LN2 = math.log(2.0)


def uniform_init(rng: Rng, rows: int, cols: int) -> np.ndarray:
    """Uniform in +-1/sqrt(fan_in), fan_in being the column count."""
    bound = 1.0 / math.sqrt(cols)
    return rng.uniform(-bound, bound, (rows, cols))


def lstm_bias_init(n: int) -> np.ndarray:
    b = np.zeros(4 * n)
    b[n:2 * n] = 1.0
    return b


class Embedding:
    """Token table shared by the input lookup and the output projection."""

    def __init__(self, vocab: int, dim: int, rng: Rng | None = None,
                 init_range: float = 0.1, name: str = "embed"):
        self.vocab = vocab
        self.dim = dim
        table = (rng.uniform(-init_range, init_range, (vocab, dim))
                 if rng is not None else np.zeros((vocab, dim)))
        self.weight = Parameter(table, name=name)

    def parameters(self):
        return [self.weight]

    def __call__(self, tokens):
        return embed(self, tokens)

    def logits(self, h):
        """Tied output projection ``h @ table.T`` for ``h`` of shape (N, E)."""
        return matmul(h, transpose(self.weight))


def embed(table: Embedding, tokens) -> "Tensor":
    return gather_rows(table.weight, np.asarray(tokens))


class DenseLSTMWeights:
    """Directly parameterised LSTM weights."""

    compressed = False

    def __init__(self, n: int, m: int, rng: Rng | None = None, name: str = "lstm"):
        self.n, self.m = n, m
        if rng is None:
            w = np.zeros((4 * n, m))
            r = np.zeros((4 * n, n))
        else:
            w = np.concatenate([uniform_init(rng, n, m) for _ in GATES])
            r = np.concatenate([uniform_init(rng, n, n) for _ in GATES])
        self.W = Parameter(w, name=f"{name}.W")
        self.R = Parameter(r, name=f"{name}.R")
        self.b = Parameter(lstm_bias_init(n) if rng is not None else np.zeros(4 * n),
                           name=f"{name}.b")

    def parameters(self):
        return [self.W, self.R, self.b]

    def matrices(self):
        return self.W, self.R, self.b


class DCTLSTMWeights:
    """LSTM whose eight weight matrices are each a coefficient vector."""

    compressed = True

    def __init__(self, n: int, m: int, rate: float, corner: str = codec.HIGH,
                 budget: str = "diagonal", rng: Rng | None = None,
                 name: str = "lstm", dense_init: tuple | None = None):
        self.n, self.m = n, m
        self.plan_w = codec.plan_for_rate(n, m, rate, corner, budget)
        self.plan_r = codec.plan_for_rate(n, n, rate, corner, budget)
        if dense_init is not None:
            w, r = dense_init
        elif rng is not None:
            w = np.concatenate([uniform_init(rng, n, m) for _ in GATES])
            r = np.concatenate([uniform_init(rng, n, n) for _ in GATES])
        else:
            w, r = np.zeros((4 * n, m)), np.zeros((4 * n, n))
        self.gw = [codec.CoefficientVector.from_dense(w[k * n:(k + 1) * n], self.plan_w,
                                                      f"{name}.W_{g}")
                   for k, g in enumerate(GATES)]
        self.gr = [codec.CoefficientVector.from_dense(r[k * n:(k + 1) * n], self.plan_r,
                                                      f"{name}.R_{g}")
                   for k, g in enumerate(GATES)]
        self.b = Parameter(lstm_bias_init(n) if rng is not None or dense_init is not None
                           else np.zeros(4 * n), name=f"{name}.b")

    def parameters(self):
        return [*self.gw, *self.gr, self.b]

    def coefficient_vectors(self):
        return [*self.gw, *self.gr]

    def matrices(self):
        # weights are constant over a segment: decompress once per forward
        w = concat([codec.decompress(g, g.plan) for g in self.gw], axis=0)
        r = concat([codec.decompress(g, g.plan) for g in self.gr], axis=0)
        return w, r, self.b


def lstm_weights(n, m, rate=0.0, corner=codec.HIGH, budget="diagonal",
                 rng=None, name="lstm", dense=None):
    """Dense weights for ``dense=True`` (default when rate is 0), else DCT."""
    if dense is None:
        dense = rate == 0.0
    if dense:
        return DenseLSTMWeights(n, m, rng, name)
    return DCTLSTMWeights(n, m, rate, corner, budget, rng, name)


def lstm_step(weights, x, h, c):
    """One LSTM step composed from primitive operations.

    Returns ``(h_t, c_t)``.  ``weights`` is anything with ``matrices()``.
    """
    W, R, b = weights.matrices()
    n = weights.n
    pre = add_bias(add(matmul(x, transpose(W)), matmul(h, transpose(R))), b)
    i = sigmoid(slice_last(pre, 0, n))
    f = sigmoid(slice_last(pre, n, 2 * n))
    o = sigmoid(slice_last(pre, 2 * n, 3 * n))
    z = tanh(slice_last(pre, 3 * n, 4 * n))
    c_new = add(mul(f, c), mul(i, z))
    return mul(o, tanh(c_new)), c_new


class LSTMCell(Op):
    """Fused pointwise cell: gate pre-activations and previous cell state to
    ``[h_t, c_t]`` concatenated along the last axis."""

    name = "lstm_cell"
    n_inputs = 2

    def forward(self, ctx, pre, c_prev):
        act, c, tc, h = kernels.lstm_pointwise_forward(pre, c_prev)
        ctx.save_for_backward(act, c_prev, tc)
        return np.concatenate([h, c], axis=1)

    def backward(self, ctx, grad):
        act, c_prev, tc = ctx.saved
        n = c_prev.shape[1]
        dpre, dcp = kernels.lstm_pointwise_backward(act, c_prev, tc, grad[:, :n], grad[:, n:])
        return dpre, dcp


lstm_cell = LSTMCell()


class LSTMSequence(Op):
    """Whole-segment LSTM recurrence as one tape node.

    Inputs ``xs`` (T, B, m), ``W``, ``R``, ``b``, ``h0`` and ``c0`` (B, n);
    output ``hs`` (T, B, n).  The final ``(h_T, c_T)`` are exposed as
    ``tensor.aux`` for carrying into the next segment.
    """

    name = "lstm_sequence"
    n_inputs = 6

    def forward(self, ctx, xs, W, R, b, h0, c0):
        T, B, m = xs.shape
        n = R.shape[1]
        if W.shape != (4 * n, m) or R.shape != (4 * n, n) or b.shape != (4 * n,) \
                or h0.shape != (B, n) or c0.shape != (B, n):
            raise DimensionError(
                f"lstm_sequence: xs {xs.shape}, W {W.shape}, R {R.shape}, "
                f"b {b.shape}, h0 {h0.shape}, c0 {c0.shape}")
        xp = (xs.reshape(T * B, m) @ W.T + b).reshape(T, B, 4 * n)
        acts = np.empty((T, B, 4 * n), dtype=xp.dtype)
        cs = np.empty((T + 1, B, n), dtype=xp.dtype)
        tcs = np.empty((T, B, n), dtype=xp.dtype)
        hs = np.empty((T + 1, B, n), dtype=xp.dtype)
        hs[0], cs[0] = h0, c0
        Rt = np.ascontiguousarray(R.T)
        for t in range(T):
            pre = xp[t] + hs[t] @ Rt
            acts[t], cs[t + 1], tcs[t], hs[t + 1] = kernels.lstm_pointwise_forward(pre, cs[t])
        ctx.save_for_backward(xs, W, R, acts, cs, tcs, hs)
        ctx.aux = (hs[T].copy(), cs[T].copy())
        return hs[1:]

    def backward(self, ctx, grad):
        xs, W, R, acts, cs, tcs, hs = ctx.saved
        T, B, m = xs.shape
        n = R.shape[1]
        dpre = np.empty_like(acts)
        dh = np.zeros((B, n), dtype=grad.dtype)
        dc = np.zeros((B, n), dtype=grad.dtype)
        for t in range(T - 1, -1, -1):
            dpre[t], dc = kernels.lstm_pointwise_backward(
                acts[t], cs[t], tcs[t], grad[t] + dh, dc)
            dh = dpre[t] @ R
        flat = dpre.reshape(T * B, 4 * n)
        dxs = (flat @ W).reshape(T, B, m) if ctx.needs[0] else None
        dW = flat.T @ xs.reshape(T * B, m)
        dR = flat.T @ hs[:T].reshape(T * B, n)
        db = flat.sum(axis=0)
        return dxs, dW, dR, db, dh, dc


lstm_sequence_op = LSTMSequence()


def lstm_sequence(weights, xs, h0, c0, recurrent_mask=None):
    """Run a layer over a (T, B, m) segment; returns ``(hs, (h_T, c_T))``.

    ``recurrent_mask`` (4n x n) drops recurrent weights for the whole
    segment.
    """
    W, R, b = weights.matrices()
    if recurrent_mask is not None:
        R = mul(R, recurrent_mask)
    out = lstm_sequence_op(xs, W, R, b, h0, c0)
    return out, out.aux


def dropout_mask(shape, p: float, rng: Rng, dtype=None) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability ``p``, else ``1/(1-p)``."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
    keep = rng.random(shape) >= p
    return (keep / (1.0 - p)).astype(dtype or config.get_dtype())


def dropout(x, p: float, train: bool, rng: Rng | None = None):
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    value = x.value if hasattr(x, "value") else np.asarray(x)
    return mul(x, dropout_mask(value.shape, p, rng, value.dtype))


def lm_loss(logits, targets):
    """Mean cross-entropy in nats over all positions."""
    return cross_entropy(logits, np.asarray(targets).ravel())


def bits_per_character(loss_nats: float) -> float:
    return float(loss_nats) / LN2


def dense_lstm_params(n: int, m: int) -> int:
    return 4 * (n * m + n * n + n)


def dct_lstm_params(n: int, m: int, rate: float, budget: str = "diagonal") -> int:
    return 4 * (codec.coeff_budget(n, m, rate, budget)
                + codec.coeff_budget(n, n, rate, budget) + n)


def project(h, weight):
    """``h (..., k) -> h @ weight.T`` flattened to two dimensions."""
    k = h.shape[-1]
    return matmul(reshape(h, (-1, k)), transpose(weight))
