"""Fast-weight RNN layers driven by slow LSTMs in coefficient space.

At every step a slow LSTM reads the input and its own previous hidden state,
which *is* the coefficient vector of a fast weight matrix.  The fast cell is

    h_t = tanh(W_t x_t + R_t h_{t-1}),   W_t = decompress(g^i_t),
                                          R_t = decompress(g^h_t)

``twin`` layers use one slow LSTM per fast matrix; ``single`` layers use one
slow LSTM whose hidden vector is split into ``[g^i, g^h]``.

Two backward strategies are available.  ``naive`` puts the dense per-step
matrices on the tape.  ``recompute`` keeps only the coefficient vectors and
rebuilds each matrix inside the backward pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec
from .layers import lstm_cell, lstm_weights, uniform_init
from .numerics import (Rng, add, add_bias, bmv, config, matmul, register_custom_op,
                       reshape, select, slice_last, stack, tanh, transpose)

TWIN = "twin"
SINGLE = "single"
MODES = ("recompute", "naive")


def _fast_matvec_forward(ctx, g, x, plan=None):
    w = codec.decompress_array(g, plan)
    ctx.attrs["plan"] = plan
    ctx.save_for_backward(g, tag="weights")
    ctx.save_for_backward(x)
    return np.einsum("bnm,bm->bn", w, x)


def _fast_matvec_backward(ctx, grad):
    g, x = ctx.saved
    plan = ctx.attrs["plan"]
    dx = None
    if ctx.needs[1]:
        w = codec.decompress_array(g, plan)
        dx = np.einsum("bnm,bn->bm", w, grad)
    dg = None
    if ctx.needs[0]:
        # D_n (dy x^T) D_m^T is rank one per example
        left = grad @ codec.dct_basis(plan.n, grad.dtype).T
        right = x @ codec.dct_basis(plan.m, x.dtype).T
        dg = left[:, plan.rows] * right[:, plan.cols]
    return dg, dx


fast_matvec = register_custom_op("fast_matvec", _fast_matvec_forward,
                                 _fast_matvec_backward, n_inputs=2, save="manual")


def generated_matvec(g, x, plan: codec.PackingPlan, mode: str = "recompute"):
    """``decompress(g[b]) @ x[b]`` for every example ``b``."""
    if mode == "recompute":
        return fast_matvec(g, x, plan=plan)
    if mode == "naive":
        return bmv(codec.decompress(g, plan), x)
    raise ValueError(f"unknown backward mode {mode!r}")


@dataclass
class FastState:
    """Per-sequence recurrent state of one fast layer (arrays, batch-major).

    ``g_h`` and ``c_h`` are ``None`` for the single variant, whose slow
    hidden vector ``g_i`` holds both coefficient vectors.
    """

    g_i: np.ndarray
    c_i: np.ndarray
    g_h: np.ndarray | None
    c_h: np.ndarray | None
    h: np.ndarray

    def arrays(self) -> dict:
        return {k: v for k, v in vars(self).items() if v is not None}


class FastRNNLayer:
    def __init__(self, n: int, m: int, rate: float, variant: str = TWIN,
                 corner: str = codec.HIGH, budget: str = "diagonal",
                 slow_rate: float = 0.0, rng: Rng | None = None,
                 name: str = "fast"):
        if variant not in (TWIN, SINGLE):
            raise ValueError(f"unknown fast-weight variant {variant!r}")
        self.n, self.m = n, m
        self.variant = variant
        self.name = name
        self.plan_i = codec.plan_for_rate(n, m, rate, corner, budget)
        self.plan_h = codec.plan_for_rate(n, n, rate, corner, budget)
        ci, ch = self.plan_i.c, self.plan_h.c
        if variant == TWIN:
            self.slow = [lstm_weights(ci, m, slow_rate, corner, budget, rng, f"{name}.slow_i"),
                         lstm_weights(ch, m, slow_rate, corner, budget, rng, f"{name}.slow_h")]
        else:
            self.slow = [lstm_weights(ci + ch, m, slow_rate, corner, budget, rng,
                                      f"{name}.slow")]
        # initial coefficients come from a conventionally initialised matrix
        if rng is not None:
            self.g0_i = codec.compress(uniform_init(rng, n, m), self.plan_i)
            self.g0_h = codec.compress(uniform_init(rng, n, n), self.plan_h)
        else:
            self.g0_i, self.g0_h = np.zeros(ci), np.zeros(ch)

    @property
    def c_i(self) -> int:
        return self.plan_i.c

    @property
    def c_h(self) -> int:
        return self.plan_h.c

    def fast_param_count(self) -> int:
        return self.c_i + self.c_h

    def parameters(self):
        return [p for s in self.slow for p in s.parameters()]

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.g0_i": self.g0_i, f"{self.name}.g0_h": self.g0_h}

    def initial_state(self, batch: int) -> FastState:
        dtype = config.get_dtype()
        gi = np.tile(self.g0_i, (batch, 1)).astype(dtype)
        gh = np.tile(self.g0_h, (batch, 1)).astype(dtype)
        h = np.zeros((batch, self.n), dtype=dtype)
        if self.variant == TWIN:
            return FastState(gi, np.zeros_like(gi), gh, np.zeros_like(gh), h)
        g = np.concatenate([gi, gh], axis=1)
        return FastState(g, np.zeros_like(g), None, None, h)


def _slow_step(weights, xproj, g_prev, c_prev, R, b):
    H = weights.n
    pre = add_bias(add(xproj, matmul(g_prev, transpose(R))), b)
    hc = lstm_cell(pre, c_prev)
    return slice_last(hc, 0, H), slice_last(hc, H, 2 * H)


def fast_step(layer: FastRNNLayer, x, state, mode: str = "recompute"):
    """Advance one step.  ``state`` holds tensors or arrays; returns
    ``(h_t, new_state)`` where ``new_state`` is a :class:`FastState` of
    tensors."""
    out = _unroll(layer, [x], state, mode, per_step_inputs=True)
    return out[0][0], out[1]


def _unroll(layer, xs, state, mode, per_step_inputs=False):
    matrices = [s.matrices() for s in layer.slow]
    if per_step_inputs:
        T = len(xs)
        projections = [[matmul(x, transpose(W)) for x in xs] for W, _, _ in matrices]
    else:
        T, B, m = xs.shape
        flat = reshape(xs, (T * B, m))
        projections = []
        for (W, _, _), s in zip(matrices, layer.slow):
            p = reshape(matmul(flat, transpose(W)), (T, B, 4 * s.n))
            projections.append([select(p, t) for t in range(T)])
    g_i, c_i, g_h, c_h, h = state.g_i, state.c_i, state.g_h, state.c_h, state.h
    ci = layer.c_i
    hs = []
    for t in range(T):
        x_t = xs[t] if per_step_inputs else select(xs, t)
        if layer.variant == TWIN:
            (_, Ri, bi), (_, Rh, bh) = matrices
            g_i, c_i = _slow_step(layer.slow[0], projections[0][t], g_i, c_i, Ri, bi)
            g_h, c_h = _slow_step(layer.slow[1], projections[1][t], g_h, c_h, Rh, bh)
            gi_t, gh_t = g_i, g_h
        else:
            (_, R, b), = matrices
            g_i, c_i = _slow_step(layer.slow[0], projections[0][t], g_i, c_i, R, b)
            gi_t = slice_last(g_i, 0, ci)
            gh_t = slice_last(g_i, ci, ci + layer.c_h)
        y = add(generated_matvec(gi_t, x_t, layer.plan_i, mode),
                generated_matvec(gh_t, h, layer.plan_h, mode))
        h = tanh(y)
        hs.append(h)
    return hs, FastState(g_i, c_i, g_h, c_h, h)


def fast_sequence(layer: FastRNNLayer, xs, state: FastState, mode: str = "recompute"):
    """Run a (T, B, m) segment; returns ``(hs (T, B, n), final FastState)``.

    The returned state holds plain arrays, detached from the tape.
    """
    hs, final = _unroll(layer, xs, state, mode)
    detached = FastState(*(None if v is None else np.array(_value(v))
                           for v in (final.g_i, final.c_i, final.g_h, final.c_h, final.h)))
    return stack(hs), detached


def _value(v):
    return v.value if hasattr(v, "value") else v


def fast_param_count(layers) -> int:
    return sum(layer.fast_param_count() for layer in layers)
