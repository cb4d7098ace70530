"""Reverse-mode automatic differentiation on dense float64 arrays.

Small by design: scalars, vectors and small matrices only, with the
primitive set needed by the LSTM encoder, MLP heads and ranking losses.
Values are computed eagerly at node construction (so building the graph
is the forward pass); `backward` walks the graph in reverse topological
order and accumulates gradients into every node.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "constant",
    "parameter",
    "concat",
    "embedding_lookup",
]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the computation graph.

    Holds a value, an accumulated gradient of the same shape, the
    primitive tag that produced it and references to its parents.
    Gradient storage is allocated lazily on first use.
    """

    __slots__ = ("data", "_grad", "op", "_parents", "_backward", "name")

    def __init__(self, data, op: str = "leaf", parents: tuple = (), name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self._grad = None
        self.op = op
        self._parents = parents
        self._backward = None
        self.name = name

    # -- gradient storage --------------------------------------------------

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value):
        self._grad = value

    def _accum(self, contrib: np.ndarray, fresh: bool) -> None:
        """Add a gradient contribution; takes ownership when `fresh`."""
        if self._grad is None:
            self._grad = contrib if fresh else contrib.copy()
        else:
            self._grad += contrib

    # -- utilities ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor(op={self.op}{label}, shape={self.data.shape})"

    def zero_grad(self):
        self._grad = None

    def item(self) -> float:
        return float(self.data)

    # -- graph traversal ---------------------------------------------------

    def _topo_order(self):
        order, seen, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        return order

    def backward(self):
        """Accumulate d(self)/d(node) into every node's `.grad`.

        The root must be a scalar (a single-element array).
        """
        if self.data.size != 1:
            raise ValueError(
                f"backward requires a scalar root, got shape {self.data.shape} "
                f"from op {self.op!r}"
            )
        self._grad = np.ones_like(self.data)
        for node in reversed(self._topo_order()):
            if node._backward is not None:
                node._backward()

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other, op="const")

    def __add__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data + other.data, op="add", parents=(self, other))

        def _backward():
            g = _unbroadcast(out.grad, self.data.shape)
            self._accum(g, fresh=g is not out._grad)
            g = _unbroadcast(out.grad, other.data.shape)
            other._accum(g, fresh=g is not out._grad)

        out._backward = _backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, op="neg", parents=(self,))

        def _backward():
            self._accum(-out.grad, fresh=True)

        out._backward = _backward
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data * other.data, op="mul", parents=(self, other))

        def _backward():
            self._accum(_unbroadcast(other.data * out.grad, self.data.shape),
                        fresh=True)
            other._accum(_unbroadcast(self.data * out.grad, other.data.shape),
                         fresh=True)

        out._backward = _backward
        return out

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._coerce(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ValueError(
                f"matmul expects 2-d operands, got {self.data.shape} @ "
                f"{other.data.shape} (ops {self.op!r}, {other.op!r})"
            )
        if self.data.shape[1] != other.data.shape[0]:
            raise ValueError(
                f"matmul shape mismatch: {self.data.shape} @ {other.data.shape} "
                f"(ops {self.op!r}, {other.op!r})"
            )
        out = Tensor(self.data @ other.data, op="matmul", parents=(self, other))

        def _backward():
            self._accum(out.grad @ other.data.T, fresh=True)
            other._accum(self.data.T @ out.grad, fresh=True)

        out._backward = _backward
        return out

    # -- nonlinearities ----------------------------------------------------

    def tanh(self):
        value = np.tanh(self.data)
        out = Tensor(value, op="tanh", parents=(self,))

        def _backward():
            self._accum((1.0 - value * value) * out.grad, fresh=True)

        out._backward = _backward
        return out

    def sigmoid(self):
        e = np.exp(-np.abs(self.data))
        value = np.where(self.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        out = Tensor(value, op="sigmoid", parents=(self,))

        def _backward():
            self._accum(value * (1.0 - value) * out.grad, fresh=True)

        out._backward = _backward
        return out

    def exp(self):
        value = np.exp(self.data)
        out = Tensor(value, op="exp", parents=(self,))

        def _backward():
            self._accum(value * out.grad, fresh=True)

        out._backward = _backward
        return out

    def log(self):
        out = Tensor(np.log(self.data), op="log", parents=(self,))

        def _backward():
            self._accum(out.grad / self.data, fresh=True)

        out._backward = _backward
        return out

    def maximum(self, threshold: float):
        """max(x, threshold) elementwise; subgradient 0 at the kink."""
        mask = self.data > threshold
        out = Tensor(np.where(mask, self.data, threshold), op="maximum", parents=(self,))

        def _backward():
            self._accum(mask * out.grad, fresh=True)

        out._backward = _backward
        return out

    def relu(self):
        return self.maximum(0.0)

    # -- reductions and shape ops -----------------------------------------

    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), op="sum", parents=(self,))

        def _backward():
            grad = out.grad
            if axis is not None and not keepdims:
                grad = np.expand_dims(grad, axis)
            self._accum(np.broadcast_to(grad, self.data.shape), fresh=False)

        out._backward = _backward
        return out

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        out = Tensor(self.data.reshape(*shape), op="reshape", parents=(self,))

        def _backward():
            self._accum(out.grad.reshape(self.data.shape), fresh=False)

        out._backward = _backward
        return out

    def slice_cols(self, start: int, stop: int):
        out = Tensor(self.data[:, start:stop], op="slice_cols", parents=(self,))

        def _backward():
            self.grad[:, start:stop] += out.grad

        out._backward = _backward
        return out

    def take(self, indices):
        """Gather rows along axis 0; gradient scatter-adds."""
        indices = np.asarray(indices, dtype=np.intp)
        out = Tensor(self.data[indices], op="take", parents=(self,))

        def _backward():
            np.add.at(self.grad, indices, out.grad)

        out._backward = _backward
        return out

    # -- softmax family ----------------------------------------------------

    def softmax(self, axis: int = -1):
        """Row-stable softmax (max-subtraction)."""
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        exps = np.exp(shifted)
        value = exps / exps.sum(axis=axis, keepdims=True)
        out = Tensor(value, op="softmax", parents=(self,))

        def _backward():
            inner = (out.grad * value).sum(axis=axis, keepdims=True)
            self._accum(value * (out.grad - inner), fresh=True)

        out._backward = _backward
        return out

    def logsumexp(self, axis: int = -1):
        peak = self.data.max(axis=axis, keepdims=True)
        value = np.log(np.exp(self.data - peak).sum(axis=axis, keepdims=True)) + peak
        out = Tensor(np.squeeze(value, axis=axis), op="logsumexp", parents=(self,))

        def _backward():
            soft = np.exp(self.data - value)
            self._accum(soft * np.expand_dims(out.grad, axis), fresh=True)

        out._backward = _backward
        return out


def constant(value, name: str = "") -> Tensor:
    return Tensor(value, op="const", name=name)


def parameter(value, name: str) -> Tensor:
    return Tensor(value, op="param", name=name)


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = list(tensors)
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                 op="concat", parents=tuple(tensors))
    offsets = np.cumsum([0] + [t.data.shape[axis] for t in tensors])

    def _backward():
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * out.grad.ndim
            index[axis] = slice(lo, hi)
            t._accum(out.grad[tuple(index)], fresh=False)

    out._backward = _backward
    return out


def embedding_lookup(table: Tensor, indices) -> Tensor:
    """Gather rows of `table` for integer `indices`; gradient scatter-adds."""
    indices = np.asarray(indices, dtype=np.intp)
    if indices.size and (indices.min() < 0 or indices.max() >= table.data.shape[0]):
        raise ValueError(
            f"embedding index out of range [0, {table.data.shape[0]}) "
            f"in lookup on {table.name or 'table'}"
        )
    out = Tensor(table.data[indices], op="embedding", parents=(table,))

    def _backward():
        np.add.at(table.grad, indices, out.grad)

    out._backward = _backward
    return out
