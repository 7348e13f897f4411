"""Built-in differentiable operations.

Shapes are explicit: the only broadcasting allowed is adding a bias vector
along the last axis (:func:`add_bias`).  Everything else requires equal
shapes and raises :class:`DimensionError` naming both operands otherwise.
"""
from __future__ import annotations

import numpy as np

from .tape import DimensionError, Op


def sigmoid_array(x: np.ndarray) -> np.ndarray:
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _same_shape(name, a, b):
    if a.shape != b.shape:
        raise DimensionError(f"{name}: shapes {a.shape} and {b.shape} differ")


class MatMul(Op):
    name = "matmul"
    n_inputs = 2

    def forward(self, ctx, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError(
                f"matmul: cannot multiply {a.shape} by {b.shape}")
        ctx.save_for_backward(a, b)
        return a @ b

    def backward(self, ctx, g):
        a, b = ctx.saved
        da = g @ b.T if ctx.needs[0] else None
        db = a.T @ g if ctx.needs[1] else None
        return da, db


class BatchMatVec(Op):
    """Per-example matrix-vector product: ``y[b] = W[b] @ x[b]``."""

    name = "bmv"
    n_inputs = 2

    def forward(self, ctx, w, x):
        if w.ndim != 3 or x.ndim != 2 or w.shape[0] != x.shape[0] \
                or w.shape[2] != x.shape[1]:
            raise DimensionError(f"bmv: cannot apply {w.shape} to {x.shape}")
        ctx.save_for_backward(w, tag="weights")
        ctx.save_for_backward(x)
        return np.einsum("bnm,bm->bn", w, x)

    def backward(self, ctx, g):
        w, x = ctx.saved
        dw = g[:, :, None] * x[:, None, :] if ctx.needs[0] else None
        dx = np.einsum("bnm,bn->bm", w, g) if ctx.needs[1] else None
        return dw, dx


class Add(Op):
    name = "add"
    n_inputs = 2

    def forward(self, ctx, a, b):
        _same_shape(self.name, a, b)
        return a + b

    def backward(self, ctx, g):
        return g, g


class AddBias(Op):
    name = "add_bias"
    n_inputs = 2

    def forward(self, ctx, x, b):
        if b.ndim != 1 or x.shape[-1] != b.shape[0]:
            raise DimensionError(f"add_bias: bias {b.shape} does not fit {x.shape}")
        return x + b

    def backward(self, ctx, g):
        return g, g.reshape(-1, g.shape[-1]).sum(axis=0)


class Mul(Op):
    name = "mul"
    n_inputs = 2

    def forward(self, ctx, a, b):
        _same_shape(self.name, a, b)
        ctx.save_for_backward(a, b)
        return a * b

    def backward(self, ctx, g):
        a, b = ctx.saved
        return (g * b if ctx.needs[0] else None,
                g * a if ctx.needs[1] else None)


class Scale(Op):
    name = "scale"
    n_inputs = 1

    def forward(self, ctx, x, factor=1.0):
        ctx.attrs["factor"] = factor
        return x * factor

    def backward(self, ctx, g):
        return (g * ctx.attrs["factor"],)


class Tanh(Op):
    name = "tanh"
    n_inputs = 1

    def forward(self, ctx, x):
        y = np.tanh(x)
        ctx.save_for_backward(y)
        return y

    def backward(self, ctx, g):
        (y,) = ctx.saved
        return (g * (1.0 - y * y),)


class Sigmoid(Op):
    name = "sigmoid"
    n_inputs = 1

    def forward(self, ctx, x):
        y = sigmoid_array(x)
        ctx.save_for_backward(y)
        return y

    def backward(self, ctx, g):
        (y,) = ctx.saved
        return (g * y * (1.0 - y),)


class Sum(Op):
    name = "sum"
    n_inputs = 1

    def forward(self, ctx, x):
        ctx.attrs["shape"] = x.shape
        return np.asarray(x.sum())

    def backward(self, ctx, g):
        return (np.full(ctx.attrs["shape"], g, dtype=g.dtype),)


class Transpose(Op):
    name = "transpose"
    n_inputs = 1

    def forward(self, ctx, x):
        if x.ndim != 2:
            raise DimensionError(f"transpose: expected a matrix, got {x.shape}")
        return x.T

    def backward(self, ctx, g):
        return (g.T,)


class Reshape(Op):
    name = "reshape"
    n_inputs = 1

    def forward(self, ctx, x, shape=()):
        ctx.attrs["shape"] = x.shape
        return x.reshape(shape)

    def backward(self, ctx, g):
        return (g.reshape(ctx.attrs["shape"]),)


class Concat(Op):
    name = "concat"

    def forward(self, ctx, *xs, axis=0):
        ctx.attrs["axis"] = axis
        ctx.attrs["sizes"] = [x.shape[axis] for x in xs]
        return np.concatenate(xs, axis=axis)

    def backward(self, ctx, g):
        axis = ctx.attrs["axis"]
        cuts = np.cumsum(ctx.attrs["sizes"])[:-1]
        return tuple(np.split(g, cuts, axis=axis))


class Stack(Op):
    name = "stack"

    def forward(self, ctx, *xs):
        return np.stack(xs, axis=0)

    def backward(self, ctx, g):
        return tuple(g[k] for k in range(g.shape[0]))


class Slice(Op):
    """Contiguous slice ``[start:stop]`` along the last axis."""

    name = "slice"
    n_inputs = 1

    def forward(self, ctx, x, start=0, stop=None):
        ctx.attrs["shape"] = x.shape
        ctx.attrs["range"] = (start, stop)
        return x[..., start:stop]

    def backward(self, ctx, g):
        out = np.zeros(ctx.attrs["shape"], dtype=g.dtype)
        start, stop = ctx.attrs["range"]
        out[..., start:stop] = g
        return (out,)


class Select(Op):
    """Pick entry ``k`` along the first axis."""

    name = "select"
    n_inputs = 1

    def forward(self, ctx, x, k=0):
        ctx.attrs["shape"] = x.shape
        ctx.attrs["k"] = k
        return x[k]

    def backward(self, ctx, g):
        out = np.zeros(ctx.attrs["shape"], dtype=g.dtype)
        out[ctx.attrs["k"]] = g
        return (out,)


class GatherRows(Op):
    name = "gather_rows"
    n_inputs = 1

    def forward(self, ctx, table, ids=None):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise IndexError(
                f"token id out of range for table with {table.shape[0]} rows")
        ctx.attrs["ids"] = ids
        ctx.attrs["shape"] = table.shape
        return table[ids]

    def backward(self, ctx, g):
        out = np.zeros(ctx.attrs["shape"], dtype=g.dtype)
        np.add.at(out, ctx.attrs["ids"].ravel(), g.reshape(-1, out.shape[1]))
        return (out,)


class CrossEntropy(Op):
    """Mean softmax cross-entropy of ``logits`` (N x V) against ``targets``."""

    name = "cross_entropy"
    n_inputs = 1

    def forward(self, ctx, logits, targets=None):
        if logits.ndim != 2:
            raise DimensionError(f"cross_entropy: logits must be N x V, got {logits.shape}")
        targets = np.asarray(targets).ravel()
        if targets.shape[0] != logits.shape[0]:
            raise DimensionError(
                f"cross_entropy: {logits.shape[0]} rows vs {targets.shape[0]} targets")
        shifted = logits - logits.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1))
        logp = shifted[np.arange(len(targets)), targets] - lse
        ctx.save_for_backward(shifted, lse)
        ctx.attrs["targets"] = targets
        return np.asarray(-logp.mean())

    def backward(self, ctx, g):
        shifted, lse = ctx.saved
        targets = ctx.attrs["targets"]
        p = np.exp(shifted - lse[:, None])
        p[np.arange(len(targets)), targets] -= 1.0
        return (p * (g / len(targets)),)


matmul = MatMul()
bmv = BatchMatVec()
add = Add()
add_bias = AddBias()
mul = Mul()
_scale = Scale()
_tanh = Tanh()
_sigmoid = Sigmoid()
_sum = Sum()
_transpose = Transpose()
_reshape = Reshape()
_concat = Concat()
_stack = Stack()
_slice = Slice()
_select = Select()
_gather = GatherRows()
_xent = CrossEntropy()


def tanh(x):
    return _tanh(x)


def sigmoid(x):
    return _sigmoid(x)


def scale(x, factor: float):
    return _scale(x, factor=factor)


def sum(x):  # noqa: A001
    return _sum(x)


def transpose(x):
    return _transpose(x)


def reshape(x, shape):
    return _reshape(x, shape=tuple(shape))


def concat(xs, axis: int = 0):
    return _concat(*xs, axis=axis)


def stack(xs):
    return _stack(*xs)


def slice_last(x, start: int, stop: int):
    return _slice(x, start=start, stop=stop)


def select(x, k: int):
    return _select(x, k=k)


def gather_rows(table, ids):
    return _gather(table, ids=ids)


def cross_entropy(logits, targets):
    return _xent(logits, targets=targets)


_ELEMENTWISE = {"tanh": tanh, "sigmoid": sigmoid, "add": add, "mul": mul}


def elementwise(kind: str, *operands):
    """Dispatch a pointwise operation by name (tanh, sigmoid, add, mul)."""
    try:
        fn = _ELEMENTWISE[kind]
    except KeyError:
        raise ValueError(f"unknown elementwise op {kind!r}") from None
    return fn(*operands)
