"""Reverse-mode automatic differentiation over float64 numpy arrays.

A small tape-free engine in the micrograd style: every operation builds a
`Tensor` holding its value, its parents, and a closure that maps the output
gradient to parent gradients. `Tensor.backward()` topologically sorts the
graph and accumulates gradients into `.grad`.

Leaf tensors may have `.grad` preallocated (e.g. as views into one flat
parameter buffer); accumulation is then in place, which keeps optimizer
updates cheap.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

_grad_enabled = True


class no_grad:
    """Context manager that disables graph construction (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `g` down to `shape`, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    # -- graph construction ------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    __float__ = item

    def backward(self, grad: np.ndarray | float | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's `.grad`."""
        if grad is None:
            grad = np.ones_like(self.data)
        seed = np.asarray(grad, dtype=np.float64)
        if seed.shape != self.data.shape:
            raise ValueError(f"seed gradient shape {seed.shape} != value shape {self.data.shape}")

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))

        _accumulate(self, seed)
        for node in reversed(topo):
            if node._backward is None:
                continue
            grads = node._backward(node.grad)
            for p, pg in zip(node._parents, grads):
                if pg is not None and p.requires_grad:
                    _accumulate(p, pg)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            return from_op(self.data + other.data, (self, other),
                           lambda g: (_unbroadcast(g, self.data.shape),
                                      _unbroadcast(g, other.data.shape)))
        return from_op(self.data + other, (self,),
                       lambda g: (_unbroadcast(g, self.data.shape),))

    __radd__ = __add__

    def __neg__(self):
        return from_op(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return from_op(self.data - other.data, (self, other),
                           lambda g: (_unbroadcast(g, self.data.shape),
                                      _unbroadcast(-g, other.data.shape)))
        return from_op(self.data - other, (self,),
                       lambda g: (_unbroadcast(g, self.data.shape),))

    def __rsub__(self, other):
        return from_op(other - self.data, (self,),
                       lambda g: (_unbroadcast(-g, self.data.shape),))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return from_op(self.data * other.data, (self, other),
                           lambda g: (_unbroadcast(g * other.data, self.data.shape),
                                      _unbroadcast(g * self.data, other.data.shape)))
        return from_op(self.data * other, (self,),
                       lambda g: (_unbroadcast(g * other, self.data.shape),))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return from_op(self.data / other.data, (self, other),
                           lambda g: (_unbroadcast(g / other.data, self.data.shape),
                                      _unbroadcast(-g * self.data / (other.data * other.data),
                                                   other.data.shape)))
        return self * (1.0 / other)

    def __pow__(self, exponent: float):
        # fractional exponents require a positive base
        out_data = self.data ** exponent
        return from_op(out_data, (self,),
                       lambda g: (g * exponent * self.data ** (exponent - 1.0),))

    def __matmul__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(other)
        a, b = self.data, other.data
        out_data = a @ b

        def bwd(g):
            ga = g @ np.swapaxes(b, -1, -2)
            gb = np.swapaxes(a, -1, -2) @ g
            return (_unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape))

        return from_op(out_data, (self, other), bwd)

    # -- shape ops ----------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape
        return from_op(self.data.reshape(shape), (self,),
                       lambda g: (g.reshape(old),))

    def transpose(self, axes: Sequence[int]):
        axes = tuple(axes)
        inv = tuple(np.argsort(axes))
        return from_op(self.data.transpose(axes), (self,),
                       lambda g: (g.transpose(inv),))

    def swapaxes(self, a: int, b: int):
        return from_op(np.swapaxes(self.data, a, b), (self,),
                       lambda g: (np.swapaxes(g, a, b),))

    def __getitem__(self, idx):
        out_data = self.data[idx]
        shape = self.data.shape

        def bwd(g):
            full = np.zeros(shape, dtype=np.float64)
            np.add.at(full, idx, g)
            return (full,)

        return from_op(out_data, (self,), bwd)

    # -- reductions and elementwise ----------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        shape = self.data.shape

        def bwd(g):
            gg = g
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            return (np.broadcast_to(gg, shape),)

        return from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), bwd)

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            n = self.data.size
        else:
            n = self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def exp(self):
        out_data = np.exp(self.data)
        return from_op(out_data, (self,), lambda g: (g * out_data,))

    def log(self):
        return from_op(np.log(self.data), (self,), lambda g: (g / self.data,))

    def relu(self):
        mask = self.data > 0
        return from_op(np.where(mask, self.data, 0.0), (self,),
                       lambda g: (g * mask,))


def from_op(data: np.ndarray, parents: tuple[Tensor, ...],
            backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Tensor:
    """Build an op output; records the graph only when gradients are live."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def constant(data) -> Tensor:
    """A tensor that never receives gradients (masks, dropout keeps, ...)."""
    return Tensor(data, requires_grad=False)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    return from_op(np.concatenate(datas, axis=axis), tuple(tensors), bwd)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return from_op(y, (x,), bwd)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse

    def bwd(g):
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True),)

    return from_op(y, (x,), bwd)
