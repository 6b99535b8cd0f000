"""Small reverse-mode automatic differentiation engine on numpy arrays.

Just enough tensor ops to express convolution (via padding and slicing),
multi-head attention, and softmax cross-entropy, with hand-derived
backward rules per primitive. Everything runs in float64.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Array node in the computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    # -- graph plumbing ----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate gradients of self w.r.t. every requires_grad ancestor."""
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))

        if grad is None:
            grad = np.ones_like(self.data)
        self.grad = np.asarray(grad, dtype=np.float64)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad: np.ndarray, owned: bool = False) -> None:
        # `owned` promises grad is a freshly allocated array (or a view of a
        # buffer no other live node accumulates into), so storing the
        # reference is safe.
        if self.grad is None:
            self.grad = grad if owned else grad.copy()
        else:
            self.grad += grad

    # -- operators ----------------------------------------------------------

    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, Tensor(-1.0))

    def __sub__(self, other):
        return add(self, -_as_tensor(other))

    def __rsub__(self, other):
        return add(_as_tensor(other), -self)

    def __truediv__(self, other):
        return div(self, _as_tensor(other))

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __getitem__(self, key):
        return take_slice(self, key)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) != 1 else shape[0])

    def transpose(self, axes):
        return transpose(self, axes)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _backward=backward)
    return Tensor(data)


# -- arithmetic --------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(grad):
        if a.requires_grad:
            g = _unbroadcast(grad, a.data.shape)
            a._accumulate(g, owned=g is not grad)
        if b.requires_grad:
            g = _unbroadcast(grad, b.data.shape)
            b._accumulate(g, owned=g is not grad)

    return _make(out_data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad * b.data, a.data.shape), owned=True)
        if b.requires_grad:
            b._accumulate(_unbroadcast(grad * a.data, b.data.shape), owned=True)

    return _make(out_data, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data / b.data

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad / b.data, a.data.shape), owned=True)
        if b.requires_grad:
            b._accumulate(_unbroadcast(-grad * a.data / (b.data**2), b.data.shape), owned=True)

    return _make(out_data, (a, b), backward)


def power(a: Tensor, exponent: float) -> Tensor:
    if exponent == 2:
        out_data = np.square(a.data)
    elif exponent == 0.5:
        out_data = np.sqrt(a.data)
    else:
        out_data = a.data**exponent

    def backward(grad):
        if not a.requires_grad:
            return
        if exponent == 2:
            a._accumulate(grad * (2.0 * a.data), owned=True)
        elif exponent == 0.5:
            a._accumulate(grad * (0.5 / out_data), owned=True)
        else:
            a._accumulate(grad * exponent * a.data ** (exponent - 1), owned=True)

    return _make(out_data, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must be at least 2-D")
    out_data = a.data @ b.data

    def backward(grad):
        if a.requires_grad:
            a._accumulate(_unbroadcast(grad @ np.swapaxes(b.data, -1, -2), a.data.shape), owned=True)
        if b.requires_grad:
            b._accumulate(_unbroadcast(np.swapaxes(a.data, -1, -2) @ grad, b.data.shape), owned=True)

    return _make(out_data, (a, b), backward)


# -- elementwise nonlinearities ----------------------------------------------


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def backward(grad):
        if a.requires_grad:
            a._accumulate(grad * out_data, owned=True)

    return _make(out_data, (a,), backward)


def log(a: Tensor) -> Tensor:
    out_data = np.log(a.data)

    def backward(grad):
        if a.requires_grad:
            a._accumulate(grad / a.data, owned=True)

    return _make(out_data, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(grad):
        if a.requires_grad:
            a._accumulate(grad * (1.0 - out_data**2), owned=True)

    return _make(out_data, (a,), backward)


def gelu(a: Tensor) -> Tensor:
    """Smooth GELU (tanh approximation); kink-free, so finite differences agree."""
    c = np.sqrt(2.0 / np.pi)
    x = a.data
    t = np.tanh(c * (x + 0.044715 * x**3))
    out_data = 0.5 * x * (1.0 + t)

    def backward(grad):
        if a.requires_grad:
            inner_grad = c * (1.0 + 3 * 0.044715 * x**2)
            a._accumulate(grad * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * inner_grad), owned=True)

    return _make(out_data, (a,), backward)


# -- reductions and shape ------------------------------------------------------


def tensor_sum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(grad):
        if not a.requires_grad:
            return
        g = grad
        if axis is not None and not keepdims:
            axes = axis if isinstance(axis, tuple) else (axis,)
            g = np.expand_dims(g, tuple(ax % a.data.ndim for ax in axes))
        a._accumulate(np.broadcast_to(g, a.data.shape).copy(), owned=True)

    return _make(out_data, (a,), backward)


def tensor_mean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.data.shape[ax] for ax in axes]))
    return mul(tensor_sum(a, axis=axis, keepdims=keepdims), Tensor(1.0 / count))


def reshape(a: Tensor, shape) -> Tensor:
    out_data = a.data.reshape(shape)

    def backward(grad):
        if a.requires_grad:
            # view of the consumer's grad buffer, which is dead after this step
            a._accumulate(grad.reshape(a.data.shape), owned=True)

    return _make(out_data, (a,), backward)


def transpose(a: Tensor, axes) -> Tensor:
    out_data = np.transpose(a.data, axes)
    inverse = np.argsort(axes)

    def backward(grad):
        if a.requires_grad:
            a._accumulate(np.transpose(grad, inverse), owned=True)

    return _make(out_data, (a,), backward)


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * grad.ndim
                index[axis] = slice(lo, hi)
                # disjoint slices, so each parent owns its region
                t._accumulate(grad[tuple(index)], owned=True)

    return _make(out_data, tuple(tensors), backward)


def pad_axis(a: Tensor, axis: int, before: int, after: int) -> Tensor:
    pads = [(0, 0)] * a.data.ndim
    pads[axis] = (before, after)
    out_data = np.pad(a.data, pads)

    def backward(grad):
        if a.requires_grad:
            index = [slice(None)] * grad.ndim
            index[axis] = slice(before, before + a.data.shape[axis])
            a._accumulate(grad[tuple(index)], owned=True)

    return _make(out_data, (a,), backward)


def take_slice(a: Tensor, key) -> Tensor:
    out_data = a.data[key]

    def backward(grad):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[key] += grad
            a._accumulate(full, owned=True)

    return _make(out_data, (a,), backward)


def take(a: Tensor, indices: np.ndarray, axis: int) -> Tensor:
    """Integer gather along one axis (used for relative-position lookups)."""
    indices = np.asarray(indices)
    out_data = np.take(a.data, indices, axis=axis)

    def backward(grad):
        if not a.requires_grad:
            return
        full = np.zeros_like(a.data)
        moved = np.moveaxis(full, axis, 0)  # view over full
        grad_moved = np.moveaxis(
            grad,
            tuple(range(axis, axis + indices.ndim)),
            tuple(range(indices.ndim)),
        )
        np.add.at(moved, indices, grad_moved)
        a._accumulate(full, owned=True)

    return _make(out_data, (a,), backward)


# -- composite helpers --------------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along one axis."""
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(grad):
        if a.requires_grad:
            inner = (grad * out_data).sum(axis=axis, keepdims=True)
            a._accumulate(out_data * (grad - inner), owned=True)

    return _make(out_data, (a,), backward)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out_data = shifted - lse
    probs = np.exp(out_data)

    def backward(grad):
        if a.requires_grad:
            a._accumulate(grad - probs * grad.sum(axis=axis, keepdims=True), owned=True)

    return _make(out_data, (a,), backward)


def layer_norm(a: Tensor, axis: int = -1, eps: float = 1e-5) -> Tensor:
    """Normalization to zero mean / unit variance along one axis (no learned scale)."""
    mu = a.data.mean(axis=axis, keepdims=True)
    var = a.data.var(axis=axis, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(var + eps)
    out_data = (a.data - mu) * inv_sigma

    def backward(grad):
        if a.requires_grad:
            g_mean = grad.mean(axis=axis, keepdims=True)
            gy_mean = (grad * out_data).mean(axis=axis, keepdims=True)
            a._accumulate(inv_sigma * (grad - g_mean - out_data * gy_mean), owned=True)

    return _make(out_data, (a,), backward)
