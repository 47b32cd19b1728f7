"""Dense float64 tensors with taped reverse-mode differentiation.

The op set is deliberately small: exactly what a one-layer attention
encoder plus its losses need. Operations record onto the innermost
active :class:`Graph` (a ``with`` context); with no graph open they are
plain forward computations, so inference never pays for the tape and is
safe to run concurrently over frozen parameters.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ShapeError

_tls = threading.local()


def _graph_stack():
    if not hasattr(_tls, "stack"):
        _tls.stack = []
    return _tls.stack


def _active_graph():
    stack = _graph_stack()
    return stack[-1] if stack else None


class Tensor:
    """A dense float64 array plus an optional gradient buffer.

    ``grad`` is allocated (as zeros) whenever ``requires_grad`` is set,
    so after a backward pass every trainable tensor has a populated
    gradient even if the graph never touched it.
    """

    __slots__ = ("data", "requires_grad", "grad", "_live")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._live = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        if self.requires_grad:
            self.grad[...] = 0.0

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class _Node:
    __slots__ = ("out", "inputs", "backward_fn", "op")

    def __init__(self, out, inputs, backward_fn, op):
        self.out = out
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.op = op


class Graph:
    """Tape of recorded operations, in execution (hence topological) order."""

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _graph_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _graph_stack().pop()
        assert popped is self
        return False

    def backward(self, out: Tensor):
        """Populate gradients of every tensor reachable from ``out``.

        ``out`` must be a scalar (a single-element tensor). Each recorded
        node is visited exactly once, in reverse execution order.
        """
        if out.data.size != 1:
            raise InputError(
                f"backward requires a scalar output, got shape {out.data.shape}"
            )
        out._accumulate(np.ones_like(out.data))
        for node in reversed(self.nodes):
            if node.out.grad is None:
                continue
            node.backward_fn(node.out.grad)
        # Make sure in-graph trainable leaves always expose a gradient.
        for node in self.nodes:
            for t in node.inputs:
                if t.requires_grad and t.grad is None:
                    t.grad = np.zeros_like(t.data)


def _record(out_data, inputs, backward_fn, op):
    graph = _active_graph()
    out = Tensor(out_data)
    if graph is not None and any(t.requires_grad or t._live for t in inputs):
        out._live = True
        graph.nodes.append(_Node(out, inputs, backward_fn, op))
    return out


def _check_same_shape(a, b, op):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


# ---------------------------------------------------------------------------
# primitive operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product. Supports 2D@2D, batched 3D@2D and 3D@3D."""
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2 or ad.shape[-1] != bd.shape[-2]:
        raise ShapeError(f"matmul: shapes {ad.shape} and {bd.shape} do not align")
    if ad.ndim == 3 and bd.ndim == 3 and ad.shape[0] != bd.shape[0]:
        raise ShapeError(f"matmul: batch sizes {ad.shape} and {bd.shape} differ")
    out_data = ad @ bd

    def backward(g):
        if a.requires_grad or a._live:
            ga = g @ np.swapaxes(bd, -1, -2)
            a._accumulate(ga)
        if b.requires_grad or b._live:
            if ad.ndim == 3 and bd.ndim == 2:
                k, n = bd.shape
                gb = ad.reshape(-1, k).T @ g.reshape(-1, n)
            else:
                gb = np.swapaxes(ad, -1, -2) @ g
            b._accumulate(gb)

    return _record(out_data, (a, b), backward, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g)
        if b.requires_grad or b._live:
            b._accumulate(g)

    return _record(out_data, (a, b), backward, "add")


def broadcast_add(a: Tensor, bias: Tensor) -> Tensor:
    """Add a vector of shape (n,) to the last axis of ``a``."""
    if bias.data.ndim != 1 or a.data.shape[-1] != bias.data.shape[0]:
        raise ShapeError(
            f"broadcast_add: shapes {a.data.shape} and {bias.data.shape} do not align"
        )
    out_data = a.data + bias.data

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g)
        if bias.requires_grad or bias._live:
            bias._accumulate(g.reshape(-1, g.shape[-1]).sum(axis=0))

    return _record(out_data, (a, bias), backward, "broadcast_add")


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out_data = a.data * c

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g * c)

    return _record(out_data, (a,), backward, "scale")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g * b.data)
        if b.requires_grad or b._live:
            b._accumulate(g * a.data)

    return _record(out_data, (a, b), backward, "mul")


def softmax_rows(a: Tensor) -> Tensor:
    """Softmax over the last axis, stabilised by a row-max shift."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        if a.requires_grad or a._live:
            s = out_data
            a._accumulate(s * (g - (g * s).sum(axis=-1, keepdims=True)))

    return _record(out_data, (a,), backward, "softmax_rows")


def concat(tensors, axis=0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise InputError("concat: need at least one tensor")
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad or t._live:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return _record(out_data, tuple(tensors), backward, "concat")


def take(a: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    """Contiguous slice [start, stop) along ``axis``."""
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out_data = a.data[idx].copy()

    def backward(g):
        if a.requires_grad or a._live:
            buf = np.zeros_like(a.data)
            buf[idx] = g
            a._accumulate(buf)

    return _record(out_data, (a,), backward, "take")


def gather_rows(table: Tensor, indices) -> Tensor:
    """Row lookup (embedding gather). ``indices`` is an int array."""
    idx = np.asarray(indices)
    out_data = table.data[idx]

    def backward(g):
        if table.requires_grad or table._live:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(
                table.grad, idx.ravel(), g.reshape(-1, table.data.shape[-1])
            )

    return _record(out_data, (table,), backward, "gather_rows")


def mean_axis(a: Tensor, axis: int) -> Tensor:
    out_data = a.data.mean(axis=axis)
    n = a.data.shape[axis]

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(np.expand_dims(g, axis).repeat(n, axis=axis) / n)

    return _record(out_data, (a,), backward, "mean_axis")


def sum_axis(a: Tensor, axis: int) -> Tensor:
    out_data = a.data.sum(axis=axis)
    n = a.data.shape[axis]

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(np.expand_dims(g, axis).repeat(n, axis=axis))

    return _record(out_data, (a,), backward, "sum_axis")


def sum_all(a: Tensor) -> Tensor:
    out_data = np.asarray(a.data.sum())

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())

    return _record(out_data, (a,), backward, "sum_all")


def l2_normalize(a: Tensor, eps: float = 1e-12) -> Tensor:
    """Normalise the last axis to unit Euclidean norm.

    Rows with norm below ``eps`` are divided by ``eps`` instead, which
    keeps the function (and its derivative) finite at zero.
    """
    norm = np.sqrt((a.data**2).sum(axis=-1, keepdims=True))
    safe = np.maximum(norm, eps)
    out_data = a.data / safe
    degenerate = norm <= eps

    def backward(g):
        if a.requires_grad or a._live:
            y = out_data
            proj = (g * y).sum(axis=-1, keepdims=True)
            ga = np.where(degenerate, g / safe, (g - y * proj) / safe)
            a._accumulate(ga)

    return _record(out_data, (a,), backward, "l2_normalize")


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Scaled inverted dropout with a recorded mask. rate=0 is the identity."""
    if not 0.0 <= rate < 1.0:
        raise InputError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return a
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    out_data = a.data * mask

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g * mask)

    return _record(out_data, (a,), backward, "dropout")


def log(a: Tensor) -> Tensor:
    out_data = np.log(a.data)

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g / a.data)

    return _record(out_data, (a,), backward, "log")


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def backward(g):
        if a.requires_grad or a._live:
            a._accumulate(g * out_data)

    return _record(out_data, (a,), backward, "exp")


def cosine_rows(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise cosine similarity along the last axis."""
    _check_same_shape(a, b, "cosine_rows")
    return sum_axis(mul(l2_normalize(a), l2_normalize(b)), -1)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """Adam accumulators for a fixed list of parameter tensors."""

    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def _ensure(self, params):
        if not self.m:
            self.m = [np.zeros_like(p.data) for p in params]
            self.v = [np.zeros_like(p.data) for p in params]
        for p, m in zip(params, self.m):
            if p.data.shape != m.shape:
                raise ShapeError(
                    f"adam: parameter shape {p.data.shape} does not match "
                    f"accumulator shape {m.shape}"
                )


def adam_step(params, state: AdamState):
    """One bias-corrected Adam update, in place, reading each ``p.grad``."""
    params = list(params)
    state._ensure(params)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ShapeError(
                f"adam: gradient shape {g.shape} does not match parameter "
                f"shape {p.data.shape}"
            )
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def clip_global_norm(params, max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad**2).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= factor
    return norm
