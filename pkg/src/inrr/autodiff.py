"""Reverse-mode automatic differentiation over dense float64 arrays.

A ``Tensor`` wraps a numpy array and remembers how it was produced; calling
``backward`` on a scalar root fills ``.grad`` on every node that contributed
to it.  The graph is rebuilt on every forward pass, and adjoints accumulate
by summation on fan-out.
"""

import numpy as np

from . import _kernels
from .errors import ContractError, ShapeError


class Tensor:
    __slots__ = ("value", "grad", "_parents", "_bwd", "trainable", "name")

    def __init__(self, value, parents=(), bwd=None, trainable=False, name=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._bwd = bwd
        self.trainable = trainable
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, -as_tensor(other))

    def __rsub__(self, other):
        return add(as_tensor(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    @property
    def T(self):
        return transpose(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def item(self):
        return float(self.value)

    def __repr__(self):
        tag = self.name or ("param" if self.trainable else "tensor")
        return f"Tensor({tag}, shape={self.value.shape})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def param(value, name=None):
    """A trainable leaf."""
    return Tensor(np.array(value, dtype=np.float64), trainable=True, name=name)


def const(value, name=None):
    return Tensor(value, name=name)


def _unbroadcast(g, shape):
    """Reduce gradient g back to `shape` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# primitive operations

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return Tensor(a.value + b.value, (a, b), bwd)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        return (_unbroadcast(g * b.value, a.value.shape),
                _unbroadcast(g * a.value, b.value.shape))

    return Tensor(a.value * b.value, (a, b), bwd)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.value.shape} and {b.value.shape}")
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.value.shape} x {b.value.shape}")

    def bwd(g):
        return g @ b.value.T, a.value.T @ g

    return Tensor(a.value @ b.value, (a, b), bwd)


def transpose(a):
    a = as_tensor(a)
    return Tensor(a.value.T, (a,), lambda g: (g.T,))


def reshape(a, shape):
    a = as_tensor(a)
    old = a.value.shape
    return Tensor(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def getitem(a, key):
    a = as_tensor(a)

    def bwd(g):
        out = np.zeros_like(a.value)
        np.add.at(out, key, g)
        return (out,)

    return Tensor(a.value[key], (a,), bwd)


def _kernel_call(fn, a, *args):
    # the jitted kernels promote 0-d inputs to 1-d; restore the shape
    y, dy = fn(np.ascontiguousarray(a.value), *args)
    return y.reshape(a.value.shape), dy.reshape(a.value.shape)


def sine(a, omega=1.0):
    """sin(omega * a), the SIREN activation."""
    a = as_tensor(a)
    s, c = _kernel_call(_kernels.sine, a, float(omega))
    return Tensor(s, (a,), lambda g: (g * (omega * c),))


def relu(a):
    a = as_tensor(a)
    y, mask = _kernel_call(_kernels.relu, a)
    return Tensor(y, (a,), lambda g: (g * mask,))


def exp_clip(a, cap=30.0):
    """exp(min(a, cap)); the clamp guards against overflow poisoning."""
    a = as_tensor(a)
    y, dy = _kernel_call(_kernels.exp_clip, a, float(cap))
    return Tensor(y, (a,), lambda g: (g * dy,))


def absolute(a):
    a = as_tensor(a)
    y, sg = _kernel_call(_kernels.abs_, a)
    return Tensor(y, (a,), lambda g: (g * sg,))


def power(a, k):
    a = as_tensor(a)
    y = a.value ** k
    return Tensor(y, (a,), lambda g: (g * k * a.value ** (k - 1.0),))


def tsum(a, axis=None):
    a = as_tensor(a)
    if axis is None:
        return Tensor(a.value.sum(), (a,),
                      lambda g: (np.broadcast_to(g, a.value.shape).copy(),))
    y = a.value.sum(axis=axis, keepdims=True)
    return Tensor(y, (a,),
                  lambda g: (np.broadcast_to(g, a.value.shape).copy(),))


def tmean(a):
    a = as_tensor(a)
    return tsum(a) * (1.0 / a.value.size)


def diag(v):
    """Vector -> diagonal matrix."""
    v = as_tensor(v)
    if v.value.ndim != 1:
        raise ShapeError(f"diag expects a vector, got shape {v.value.shape}")
    return Tensor(np.diag(v.value), (v,), lambda g: (np.diag(g).copy(),))


# ---------------------------------------------------------------------------
# backward pass

def topo_order(root):
    """Parents-before-children order, iteratively (graphs can be deep)."""
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def backward(root):
    """Fill .grad on every node reachable from the scalar `root`."""
    if root.value.size != 1:
        raise ContractError(f"backward root must be scalar, got shape {root.value.shape}")
    order = topo_order(root)
    for node in order:
        node.grad = np.zeros_like(node.value)
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node._bwd is None:
            continue
        gs = node._bwd(node.grad)
        for parent, g in zip(node._parents, gs):
            parent.grad += g


def grads(root, leaves):
    """Backward pass returning the gradient array of each requested leaf."""
    backward(root)
    return [leaf.grad for leaf in leaves]
