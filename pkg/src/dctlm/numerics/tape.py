"""Reverse-mode automatic differentiation on an explicit tape.

A :class:`Tape` records one node per differentiable operation.  Each node
keeps the operation, the tape indices of its parents and whatever payload the
operation chose to save for its backward pass.  Values themselves live on the
:class:`Tensor` handles returned to the caller, so dropping a handle frees its
array unless an operation explicitly saved it.

Parameters are persistent leaves: a :class:`Parameter` enters a tape the first
time an operation consumes it and receives its adjoint from :func:`backward`.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Any, Callable, Sequence

import numpy as np

from . import config


class DimensionError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class ArityError(ValueError):
    """A backward function returned the wrong number of adjoints."""


class Parameter:
    """Trainable leaf tensor that outlives individual tapes."""

    __slots__ = ("value", "grad", "name", "meta")

    def __init__(self, value, name: str = "", meta: dict | None = None):
        self.value = np.ascontiguousarray(value, dtype=config.get_dtype())
        self.grad: np.ndarray | None = None
        self.name = name
        self.meta = meta or {}

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Tensor:
    """Value produced by an operation, optionally attached to a tape node."""

    __slots__ = ("value", "tape", "index", "aux")

    def __init__(self, value: np.ndarray, tape: "Tape | None" = None,
                 index: int | None = None, aux: Any = None):
        self.value = value
        self.tape = tape
        self.index = index
        self.aux = aux

    @property
    def shape(self):
        return self.value.shape

    @property
    def requires_grad(self) -> bool:
        return self.index is not None

    def detach(self) -> np.ndarray:
        return self.value

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, node={self.index})"


class Context:
    """Scratch space handed to an operation's forward and backward."""

    __slots__ = ("saved", "tags", "attrs", "aux", "needs")

    def __init__(self, needs: tuple[bool, ...]):
        self.saved: tuple = ()
        self.tags: tuple[str, ...] = ()
        self.attrs: dict[str, Any] = {}
        self.aux = None
        self.needs = needs

    def save_for_backward(self, *arrays, tag: str = "activations"):
        self.saved = self.saved + arrays
        self.tags = self.tags + (tag,) * len(arrays)

    def payload_floats(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        seen = set()
        for arr, tag in zip(self.saved, self.tags):
            if isinstance(arr, np.ndarray) and id(arr) not in seen:
                seen.add(id(arr))
                out[tag] += int(arr.size)
        return dict(out)


class Node:
    __slots__ = ("op", "parents", "ctx", "shape", "param")

    def __init__(self, op, parents, ctx, shape, param=None):
        self.op = op
        self.parents = parents
        self.ctx = ctx
        self.shape = shape
        self.param = param


class Tape:
    """Append-only record of the operations of one forward pass."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._leaf_index: dict[int, int] = {}
        self.counters: dict[str, int] = defaultdict(int)

    def __len__(self):
        return len(self.nodes)

    def leaf(self, param: Parameter) -> Tensor:
        idx = self._leaf_index.get(id(param))
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append(Node(None, (), None, param.value.shape, param))
            self._leaf_index[id(param)] = idx
        return Tensor(param.value, self, idx)

    def record(self, op, parents, ctx, shape) -> int:
        for p in parents:
            if p is not None and p >= len(self.nodes):
                raise RuntimeError("parent recorded after child")
        self.nodes.append(Node(op, tuple(parents), ctx, shape))
        for tag, n in ctx.payload_floats().items():
            self.counters[tag] += n
        return len(self.nodes) - 1

    def saved_floats(self, tag: str | None = None) -> int:
        """Floats currently held as backward payload, optionally by tag."""
        if tag is None:
            return sum(self.counters.values())
        return self.counters.get(tag, 0)

    def parameters(self) -> list[Parameter]:
        return [n.param for n in self.nodes if n.param is not None]


# Operations record onto the innermost active tape; with no active tape they
# run eagerly and nothing is recorded.
_tape_stack: list[Tape] = []


class recording:
    """Context manager that makes ``tape`` the active tape."""

    def __init__(self, tape: Tape | None = None):
        self.tape = tape if tape is not None else Tape()

    def __enter__(self) -> Tape:
        _tape_stack.append(self.tape)
        return self.tape

    def __exit__(self, *exc):
        _tape_stack.pop()
        return False


def active_tape() -> Tape | None:
    return _tape_stack[-1] if _tape_stack else None


def _as_input(x, tape: Tape | None):
    if isinstance(x, Parameter):
        if tape is None:
            return x.value, None
        t = tape.leaf(x)
        return t.value, t.index
    if isinstance(x, Tensor):
        if x.tape is not None and tape is not None and x.tape is not tape:
            raise RuntimeError("tensor belongs to a different tape")
        return x.value, x.index
    return np.asarray(x), None


class Op:
    """A differentiable operation.

    Subclasses (or :func:`register_custom_op`) provide ``forward(ctx, *xs,
    **kw)`` returning an ndarray and ``backward(ctx, grad)`` returning one
    adjoint per input (``None`` for inputs without a gradient).
    """

    name = "op"
    n_inputs: int | None = None

    def forward(self, ctx: Context, *xs, **kw) -> np.ndarray:
        raise NotImplementedError

    def backward(self, ctx: Context, grad: np.ndarray) -> Sequence:
        raise NotImplementedError

    def __call__(self, *inputs, **kw) -> Tensor:
        return self.apply(*inputs, **kw)

    def apply(self, *inputs, **kw) -> Tensor:
        if self.n_inputs is not None and len(inputs) != self.n_inputs:
            raise ArityError(
                f"{self.name} takes {self.n_inputs} inputs, got {len(inputs)}")
        tape = active_tape()
        arrays, parents = [], []
        for x in inputs:
            a, p = _as_input(x, tape)
            arrays.append(a)
            parents.append(p)
        needs = tuple(p is not None for p in parents)
        ctx = Context(needs)
        value = self.forward(ctx, *arrays, **kw)
        if config.debug_enabled() and not np.all(np.isfinite(value)):
            raise FloatingPointError(f"non-finite output from {self.name}")
        if tape is None or not any(needs):
            return Tensor(value, aux=ctx.aux)
        index = tape.record(self, parents, ctx, value.shape)
        return Tensor(value, tape, index, aux=ctx.aux)


_PAYLOAD_POLICIES = ("none", "inputs", "outputs", "all", "manual")


class CustomOp(Op):
    def __init__(self, name, forward, backward, n_inputs, save):
        self.name = name
        self._forward = forward
        self._backward = backward
        self.n_inputs = n_inputs
        self.save = save

    def forward(self, ctx, *xs, **kw):
        out = self._forward(ctx, *xs, **kw)
        if self.save in ("inputs", "all"):
            ctx.save_for_backward(*xs)
        if self.save in ("outputs", "all"):
            ctx.save_for_backward(out)
        return out

    def backward(self, ctx, grad):
        return self._backward(ctx, grad)


_registry: dict[str, Op] = {}


def register_custom_op(name: str, forward: Callable, backward: Callable,
                       n_inputs: int, save: str = "manual") -> Op:
    """Register a user operation and return it, ready to call.

    ``save`` controls what is kept between the passes: ``"inputs"``,
    ``"outputs"``, ``"all"``, ``"none"``, or ``"manual"`` (forward calls
    ``ctx.save_for_backward`` itself).  Saved arrays are available as
    ``ctx.saved`` in the order inputs, then output.
    """
    if save not in _PAYLOAD_POLICIES:
        raise ValueError(f"unknown payload policy {save!r}")
    if name in _registry:
        raise ValueError(f"operation {name!r} already registered")
    op = CustomOp(name, forward, backward, n_inputs, save)
    _registry[name] = op
    return op


def get_op(name: str) -> Op:
    return _registry[name]


def backward(tape: Tape, root: Tensor, accumulate: bool = False
             ) -> dict[Parameter, np.ndarray]:
    """Return the gradient of scalar ``root`` w.r.t. every parameter leaf.

    The tape is left untouched, so calling this twice gives identical
    results.  With ``accumulate`` the gradients are also added into
    ``param.grad``.
    """
    if root.tape is not tape or root.index is None:
        raise ValueError("root is not recorded on this tape")
    if root.value.size != 1:
        raise ValueError(f"backward needs a scalar root, got shape {root.value.shape}")
    adj: list[np.ndarray | None] = [None] * (root.index + 1)
    adj[root.index] = np.ones_like(root.value)
    grads: dict[Parameter, np.ndarray] = {}
    for k in range(root.index, -1, -1):
        g = adj[k]
        if g is None:
            continue
        adj[k] = None
        node = tape.nodes[k]
        if node.param is not None:
            grads[node.param] = g
            continue
        parent_grads = node.op.backward(node.ctx, g)
        if not isinstance(parent_grads, (tuple, list)):
            parent_grads = (parent_grads,)
        if len(parent_grads) != len(node.parents):
            raise ArityError(
                f"{node.op.name}: backward returned {len(parent_grads)} "
                f"adjoints for {len(node.parents)} inputs")
        for p, pg in zip(node.parents, parent_grads):
            if p is None or pg is None:
                continue
            if pg.shape != tape.nodes[p].shape:
                raise DimensionError(
                    f"{node.op.name}: adjoint shape {pg.shape} does not match "
                    f"input shape {tape.nodes[p].shape}")
            if adj[p] is None:
                adj[p] = pg
            else:
                adj[p] = adj[p] + pg
    if accumulate:
        for param, g in grads.items():
            param.grad = g.copy() if param.grad is None else param.grad + g
    return grads
