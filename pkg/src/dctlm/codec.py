"""Orthonormal DCT bases and the anti-diagonal coefficient packing.

A weight matrix of shape ``(n, m)`` is represented by ``c`` coefficients that
fill whole anti-diagonals of an otherwise zero frequency matrix, starting at
an anchor corner.  The dense matrix is recovered with the inverse 2-D DCT::

    W = D_n.T @ F @ D_m

where ``D_k`` is the orthonormal DCT-II matrix (rows are frequencies).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import Op, Parameter, config

LOW = "low"
HIGH = "high"
CORNERS = (LOW, HIGH)
BUDGET_MODES = ("diagonal", "exact")
# Frozen enumeration order of positions inside one anti-diagonal.
ORDER_TAG = "antidiag-rowasc-v1"


@functools.lru_cache(maxsize=None)
def _basis64(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    d = math.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    d[0, :] /= math.sqrt(2.0)
    d.setflags(write=False)
    return d


@functools.lru_cache(maxsize=None)
def _basis_cast(n: int, dtype) -> np.ndarray:
    d = _basis64(n).astype(dtype)
    d.setflags(write=False)
    return d


def dct_basis(n: int, dtype=None) -> np.ndarray:
    """Orthonormal DCT-II matrix ``D[k, i] = s_k sqrt(2/n) cos(pi (2i+1) k / 2n)``.

    Matrices are cached per size and returned read-only.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"DCT size must be a positive integer, got {n!r}")
    dtype = np.dtype(dtype or config.get_dtype()).type
    if dtype is np.float64:
        return _basis64(int(n))
    return _basis_cast(int(n), dtype)


def diagonal_sizes(n: int, m: int) -> list[int]:
    """Cell counts of the ``n + m - 1`` anti-diagonals of an n x m matrix."""
    return [min(d, n - 1, m - 1, n + m - 2 - d) + 1 for d in range(n + m - 1)]


def coeff_budget(n: int, m: int, rate: float, mode: str = "diagonal") -> int:
    """Number of retained coefficients for an n x m matrix at ``rate``.

    The raw budget is ``floor((1 - rate) n m)``.  In ``"diagonal"`` mode it is
    rounded down to the largest prefix of complete anti-diagonals; in
    ``"exact"`` mode the raw budget is used and the last diagonal may be
    partially filled.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"compression rate must lie in [0, 1], got {rate}")
    if mode not in BUDGET_MODES:
        raise ValueError(f"unknown budget mode {mode!r}")
    # the epsilon absorbs representation error, e.g. (1 - 0.9) * 10 = 0.999..
    raw = min(n * m, math.floor((1.0 - rate) * n * m + 1e-9))
    if mode == "exact":
        return raw
    total = 0
    for size in diagonal_sizes(n, m):
        if total + size > raw:
            break
        total += size
    return total


@dataclass(frozen=True)
class PackingPlan:
    """Ordered frequency-matrix cells that receive the coefficients."""

    n: int
    m: int
    c: int
    corner: str = HIGH
    rows: np.ndarray = field(repr=False, compare=False, default=None)
    cols: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def positions(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def meta(self) -> dict:
        return {"n": self.n, "m": self.m, "c": self.c, "corner": self.corner,
                "order": ORDER_TAG}


@functools.lru_cache(maxsize=None)
def make_plan(n: int, m: int, c: int, corner: str = HIGH) -> PackingPlan:
    """Plan for ``c`` coefficients, anti-diagonal by anti-diagonal.

    Diagonals are taken in order of distance from the anchor corner (``(0, 0)``
    for ``"low"``, ``(n-1, m-1)`` for ``"high"``).  Within a diagonal both
    plans ascend in row index, so the two corners mirror each other as sets.
    """
    if n < 1 or m < 1:
        raise ValueError(f"matrix shape must be positive, got ({n}, {m})")
    if not 0 <= c <= n * m:
        raise ValueError(f"cannot place {c} coefficients in a {n}x{m} matrix")
    if corner not in CORNERS:
        raise ValueError(f"corner must be one of {CORNERS}, got {corner!r}")
    rows = np.empty(c, dtype=np.int64)
    cols = np.empty(c, dtype=np.int64)
    k = 0
    d = 0
    while k < c:
        if corner == LOW:
            s = d
        else:
            s = n + m - 2 - d
        r = np.arange(max(0, s - m + 1), min(s, n - 1) + 1)[:c - k]
        rows[k:k + len(r)] = r
        cols[k:k + len(r)] = s - r
        k += len(r)
        d += 1
    rows.setflags(write=False)
    cols.setflags(write=False)
    return PackingPlan(n, m, c, corner, rows, cols)


def plan_for_rate(n: int, m: int, rate: float, corner: str = HIGH,
                  mode: str = "diagonal") -> PackingPlan:
    return make_plan(n, m, coeff_budget(n, m, rate, mode), corner)


def pack_array(g: np.ndarray, plan: PackingPlan) -> np.ndarray:
    """Scatter ``g`` (shape ``(..., c)``) into zero matrices ``(..., n, m)``."""
    out = np.zeros(g.shape[:-1] + (plan.n, plan.m), dtype=g.dtype)
    out[..., plan.rows, plan.cols] = g
    return out


def decompress_array(g: np.ndarray, plan: PackingPlan) -> np.ndarray:
    """Dense weights ``D_n.T @ pack(g) @ D_m``; batched over leading axes."""
    dn = dct_basis(plan.n, g.dtype)
    dm = dct_basis(plan.m, g.dtype)
    return dn.T @ pack_array(g, plan) @ dm


def frequency_array(w: np.ndarray) -> np.ndarray:
    """Forward 2-D DCT ``D_n @ W @ D_m.T`` over the last two axes."""
    n, m = w.shape[-2:]
    return dct_basis(n, w.dtype) @ w @ dct_basis(m, w.dtype).T


def compress_array(w: np.ndarray, plan: PackingPlan) -> np.ndarray:
    if w.shape[-2:] != (plan.n, plan.m):
        raise ValueError(
            f"matrix shape {w.shape[-2:]} does not match plan ({plan.n}, {plan.m})")
    return frequency_array(w)[..., plan.rows, plan.cols]


class Pack(Op):
    name = "pack"
    n_inputs = 1

    def forward(self, ctx, g, plan=None):
        ctx.attrs["plan"] = plan
        return pack_array(g, plan)

    def backward(self, ctx, grad):
        plan = ctx.attrs["plan"]
        return (np.ascontiguousarray(grad[..., plan.rows, plan.cols]),)


class Decompress(Op):
    """Coefficients ``(..., c)`` to dense matrices ``(..., n, m)``.

    Linear, so nothing needs saving: the adjoint is the forward 2-D DCT of
    the incoming gradient gathered at the plan positions.
    """

    name = "decompress"
    n_inputs = 1

    def forward(self, ctx, g, plan=None):
        ctx.attrs["plan"] = plan
        return decompress_array(g, plan)

    def backward(self, ctx, grad):
        plan = ctx.attrs["plan"]
        return (np.ascontiguousarray(compress_array(grad, plan)),)


_pack = Pack()
_decompress = Decompress()


def pack(g, plan: PackingPlan):
    """Differentiable scatter of coefficients into the frequency matrix."""
    return _pack(g, plan=plan)


def decompress(g, plan: PackingPlan):
    """Differentiable inverse DCT of the packed coefficients."""
    return _decompress(g, plan=plan)


class CoefficientVector(Parameter):
    """Trainable coefficients of one weight matrix, bound to their plan."""

    __slots__ = ("plan",)

    def __init__(self, g, plan: PackingPlan, name: str = ""):
        g = np.asarray(g)
        if g.shape != (plan.c,):
            raise ValueError(f"expected {plan.c} coefficients, got shape {g.shape}")
        super().__init__(g, name, meta=plan.meta())
        self.plan = plan

    @classmethod
    def from_dense(cls, w: np.ndarray, plan: PackingPlan, name: str = ""):
        return cls(compress_array(np.asarray(w, dtype=np.float64), plan), plan, name)

    def dense(self) -> np.ndarray:
        return decompress_array(self.value, self.plan)


def compress(w: np.ndarray, plan: PackingPlan) -> np.ndarray:
    """Coefficients at the plan positions of the forward DCT of ``w``."""
    return compress_array(np.asarray(w), plan)


def selftest(sizes=(1, 2, 3, 8, 64, 80, 154, 400, 478), tol: float = 1e-10,
             seed: int = 0) -> list[tuple[str, bool, float]]:
    """Run the codec invariants; returns ``(check, passed, worst error)``."""
    from .numerics import Rng

    rng = Rng(seed)
    results = []
    worst = 0.0
    for n in sizes:
        d = dct_basis(n, np.float64)
        worst = max(worst, float(np.abs(d @ d.T - np.eye(n)).max()))
    results.append(("orthonormal bases", worst < tol, worst))

    rt, parseval, proj, sym = 0.0, 0.0, 0.0, True
    for n in sizes:
        for m in sizes:
            if n * m > 160_000:
                continue
            w = rng.uniform(-1, 1, (n, m))
            full = make_plan(n, m, n * m, LOW)
            rt = max(rt, float(np.abs(decompress_array(compress_array(w, full), full) - w).max()))
            for corner in CORNERS:
                plan = plan_for_rate(n, m, 0.5, corner)
                g = rng.uniform(-1, 1, (plan.c,))
                dense = decompress_array(g, plan)
                parseval = max(parseval, abs(float(np.linalg.norm(dense)) - float(np.linalg.norm(g))))
                proj = max(proj, float(np.abs(compress_array(dense, plan) - g).max(initial=0.0)))
            lo = make_plan(n, m, coeff_budget(n, m, 0.5), LOW)
            hi = make_plan(n, m, coeff_budget(n, m, 0.5), HIGH)
            sym &= set(hi.positions) == {(n - 1 - i, m - 1 - j) for i, j in lo.positions}
    results.append(("full-rate round trip", rt < tol, rt))
    results.append(("parseval", parseval < tol, parseval))
    results.append(("projection on support", proj < tol, proj))
    results.append(("corner symmetry", sym, 0.0))
    return results
