"""Minimal dense-tensor reverse-mode automatic differentiation.

Values are float64 numpy arrays. Each ``Variable`` produced by an op records
its parents and a pullback closure, so the graph itself is the tape (a
Wengert list distributed over nodes). ``backward`` topologically sorts the
subgraph reachable from a scalar loss and pushes gradients leaf-ward, each
node visited exactly once.

Graphs are built fresh per forward pass and thrown away after ``backward``;
parameters are long-lived leaf Variables reused across graphs. A Variable's
``grad`` is ``None`` until backward reaches it.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

NORM_FLOOR = 1e-12


class Variable:
    """A tensor value plus gradient slot and tape links."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_pullback")

    def __init__(self, value, requires_grad: bool = False):
        value = np.asarray(value, dtype=np.float64)
        assert np.all(np.isfinite(value)), "non-finite tensor value"
        self.value = value
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Variable, ...] = ()
        self._pullback = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Variable(shape={self.value.shape}, requires_grad={self.requires_grad})"

    # operator sugar; constants on either side are coerced
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __getitem__(self, key):
        return slice_of(self, key)

    def sum(self, axis: int | None = None):
        return sum(self, axis)

    def max(self, axis: int | None = None):
        return max(self, axis)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def constant(value) -> Variable:
    return Variable(value, requires_grad=False)


def parameter(value) -> Variable:
    return Variable(value, requires_grad=True)


def _as_variable(x) -> Variable:
    return x if isinstance(x, Variable) else constant(x)


def _make(value, parents: tuple[Variable, ...], pullback) -> Variable:
    """Build an op output; detached subgraphs are pruned eagerly."""
    out = Variable(value)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._pullback = pullback
    return out


def _accumulate(var: Variable, g: np.ndarray) -> None:
    if not var.requires_grad:
        return
    if var.grad is None:
        var.grad = np.array(g, dtype=np.float64)
    else:
        var.grad = var.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes numpy broadcasting introduced."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and linear ops


def add(a, b) -> Variable:
    a, b = _as_variable(a), _as_variable(b)
    value = a.value + b.value

    def pull(g):
        _accumulate(a, _unbroadcast(g, a.value.shape))
        _accumulate(b, _unbroadcast(g, b.value.shape))

    return _make(value, (a, b), pull)


def sub(a, b) -> Variable:
    a, b = _as_variable(a), _as_variable(b)
    value = a.value - b.value

    def pull(g):
        _accumulate(a, _unbroadcast(g, a.value.shape))
        _accumulate(b, _unbroadcast(-g, b.value.shape))

    return _make(value, (a, b), pull)


def mul(a, b) -> Variable:
    a, b = _as_variable(a), _as_variable(b)
    value = a.value * b.value

    def pull(g):
        _accumulate(a, _unbroadcast(g * b.value, a.value.shape))
        _accumulate(b, _unbroadcast(g * a.value, b.value.shape))

    return _make(value, (a, b), pull)


def scale(a, c: float) -> Variable:
    a = _as_variable(a)
    c = float(c)

    def pull(g):
        _accumulate(a, g * c)

    return _make(a.value * c, (a,), pull)


def matmul(a, b) -> Variable:
    a, b = _as_variable(a), _as_variable(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.value.shape} @ {b.value.shape}")
    value = a.value @ b.value

    def pull(g):
        _accumulate(a, g @ b.value.T)
        _accumulate(b, a.value.T @ g)

    return _make(value, (a, b), pull)


def concat(parts: Sequence[Variable], axis: int = 0) -> Variable:
    parts = [_as_variable(p) for p in parts]
    value = np.concatenate([p.value for p in parts], axis=axis)
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def pull(g):
        for p, piece in zip(parts, np.split(g, splits, axis=axis)):
            _accumulate(p, piece)

    return _make(value, tuple(parts), pull)


def slice_of(a, key) -> Variable:
    """Basic (view) indexing: ints, slices, and tuples thereof."""
    a = _as_variable(a)
    value = a.value[key]

    def pull(g):
        full = np.zeros_like(a.value)
        full[key] = g
        _accumulate(a, full)

    return _make(value, (a,), pull)


def gather_rows(table, ids: Sequence[int]) -> Variable:
    """Row lookup (embedding gather); gradients scatter-add into the table."""
    table = _as_variable(table)
    idx = np.asarray(ids, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= table.value.shape[0]):
        raise ValueError(
            f"row id out of range for table with {table.value.shape[0]} rows"
        )
    value = table.value[idx]

    def pull(g):
        full = np.zeros_like(table.value)
        np.add.at(full, idx, g)
        _accumulate(table, full)

    return _make(value, (table,), pull)


def reshape(a, shape) -> Variable:
    a = _as_variable(a)
    value = a.value.reshape(shape)

    def pull(g):
        _accumulate(a, g.reshape(a.value.shape))

    return _make(value, (a,), pull)


def tanh(a) -> Variable:
    a = _as_variable(a)
    value = np.tanh(a.value)

    def pull(g):
        _accumulate(a, g * (1.0 - value * value))

    return _make(value, (a,), pull)


def sigmoid(a) -> Variable:
    a = _as_variable(a)
    # stable in both tails
    value = np.where(
        a.value >= 0,
        1.0 / (1.0 + np.exp(-np.abs(a.value))),
        np.exp(-np.abs(a.value)) / (1.0 + np.exp(-np.abs(a.value))),
    )

    def pull(g):
        _accumulate(a, g * value * (1.0 - value))

    return _make(value, (a,), pull)


def exp(a) -> Variable:
    a = _as_variable(a)
    value = np.exp(a.value)

    def pull(g):
        _accumulate(a, g * value)

    return _make(value, (a,), pull)


def log(a) -> Variable:
    a = _as_variable(a)
    value = np.log(a.value)

    def pull(g):
        _accumulate(a, g / a.value)

    return _make(value, (a,), pull)


def sum(a, axis: int | None = None) -> Variable:
    a = _as_variable(a)
    value = a.value.sum(axis=axis)

    def pull(g):
        if axis is None:
            _accumulate(a, np.broadcast_to(g, a.value.shape).copy())
        else:
            _accumulate(a, np.broadcast_to(np.expand_dims(g, axis), a.value.shape).copy())

    return _make(value, (a,), pull)


def mean(a, axis: int | None = None) -> Variable:
    a = _as_variable(a)
    n = a.value.size if axis is None else a.value.shape[axis]
    return scale(sum(a, axis), 1.0 / n)


def max(a, axis: int | None = None) -> Variable:
    a = _as_variable(a)
    value = a.value.max(axis=axis)

    def pull(g):
        expanded = value if axis is None else np.expand_dims(value, axis)
        mask = (a.value == expanded).astype(np.float64)
        counts = mask.sum(axis=axis, keepdims=axis is not None)
        g_exp = g if axis is None else np.expand_dims(g, axis)
        _accumulate(a, mask * (g_exp / counts))

    return _make(value, (a,), pull)


def log_sum_exp(a, axis: int | None = None) -> Variable:
    """Max-shifted log-sum-exp; stable for inputs up to about +-1e3."""
    a = _as_variable(a)
    m = a.value.max(axis=axis, keepdims=True)
    shifted = np.exp(a.value - m)
    total = shifted.sum(axis=axis, keepdims=True)
    value = (m + np.log(total)).squeeze() if axis is None else np.squeeze(m + np.log(total), axis=axis)
    soft = shifted / total

    def pull(g):
        g_exp = g if axis is None else np.expand_dims(g, axis)
        _accumulate(a, soft * g_exp)

    return _make(value, (a,), pull)


def softmax(a, axis: int = -1) -> Variable:
    a = _as_variable(a)
    shifted = np.exp(a.value - a.value.max(axis=axis, keepdims=True))
    value = shifted / shifted.sum(axis=axis, keepdims=True)

    def pull(g):
        dot = (g * value).sum(axis=axis, keepdims=True)
        _accumulate(a, value * (g - dot))

    return _make(value, (a,), pull)


def detach(a) -> Variable:
    """Same value, no gradient flow through the returned variable."""
    a = _as_variable(a)
    return constant(a.value)


def l2_normalize(a, floor: float = NORM_FLOOR) -> Variable:
    """v / max(||v||_2, floor), the norm taken over the whole tensor."""
    if floor <= 0:
        raise ValueError("floor must be positive")
    a = _as_variable(a)
    norm = float(np.sqrt((a.value * a.value).sum()))
    if norm < floor:
        return scale(a, 1.0 / floor)
    value = a.value / norm

    def pull(g):
        _accumulate(a, (g - value * (value * g).sum()) / norm)

    return _make(value, (a,), pull)


# ---------------------------------------------------------------------------
# backward


def _toposort(root: Variable) -> list[Variable]:
    """Iterative DFS; returns parents-before-children order."""
    order: list[Variable] = []
    seen: set[int] = set()
    stack: list[tuple[Variable, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Variable, accumulate: bool = False) -> None:
    """Populate gradients of every requires-grad Variable reachable from ``loss``.

    Variables not reachable from the loss are untouched. By default any
    existing gradients in the reachable subgraph are reset first; pass
    ``accumulate=True`` to add onto them instead.
    """
    if loss.value.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    order = _toposort(loss)
    for node in order:
        # op outputs always reset; leaves keep their grads when accumulating
        if not accumulate or node._pullback is not None:
            node.grad = None
    _accumulate(loss, np.ones_like(loss.value))
    if not loss.requires_grad:
        return
    for node in reversed(order):
        if node._pullback is not None and node.grad is not None:
            node._pullback(node.grad)


def global_norm(variables: Iterable[Variable]) -> float:
    """L2 norm over the concatenation of all gradients (None counts as zero)."""
    total = 0.0
    for v in variables:
        if v.grad is not None:
            total += float((v.grad * v.grad).sum())
    return float(np.sqrt(total))
