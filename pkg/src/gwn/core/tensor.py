"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every primitive computes its result eagerly with numpy. When a :class:`Tape`
is active and at least one input requires a gradient, the primitive appends
an entry holding its inputs, its output and a vector-Jacobian closure. The
tape is discarded after :func:`backward`, so a fresh graph is recorded on
every forward pass.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "Tensor",
    "Tape",
    "backward",
    "tensor",
    "zeros",
    "matmul",
    "elementwise",
    "relu",
    "sigmoid",
    "tanh",
    "add",
    "sub",
    "hadamard",
    "bias_add",
    "scale",
    "softmax_rows",
    "log_softmax_rows",
    "layer_norm",
    "reshape",
    "concat",
    "stack",
    "swap_last",
    "take",
    "split",
    "unstack",
    "tsum",
    "mean",
    "cross_entropy",
    "sum_squares",
]

LN_EPS = 1e-5


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class Tensor:
    """Immutable n-dimensional array of 64-bit floats."""

    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        t = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        arr.setflags(write=False)
        t.data = arr
        t.requires_grad = requires_grad
        t.name = None
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Operator sugar for the common cases; the functional forms are canonical.
    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __getitem__(self, key) -> "Tensor":
        return take(self, key)


def tensor(data, requires_grad: bool = False, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, name=name)


def zeros(*shape: int) -> Tensor:
    return Tensor(np.zeros(shape))


class Tape:
    """Records primitive applications for one forward pass.

    Use as a context manager; nested tapes are not supported. ``params`` is an
    optional :class:`~gwn.core.params.ParamStore` (or a mapping name→Tensor)
    whose entries are reported by :func:`backward`.
    """

    _active: "Tape | None" = None

    def __init__(self, params=None):
        self.entries: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self.params = params

    def __enter__(self) -> "Tape":
        if Tape._active is not None:
            raise RuntimeError("a Tape is already recording")
        Tape._active = self
        return self

    def __exit__(self, *exc) -> None:
        Tape._active = None

    def __len__(self) -> int:
        return len(self.entries)


def _record(out: np.ndarray, inputs: Sequence[Tensor], vjp: Callable) -> Tensor:
    tape = Tape._active
    track = tape is not None and any(t.requires_grad for t in inputs)
    result = Tensor._wrap(out, track)
    if track:
        tape.entries.append((result, tuple(inputs), vjp))
    return result


def _record_multi(outs: Sequence[np.ndarray], inputs: Sequence[Tensor], vjp: Callable) -> list[Tensor]:
    """Record a primitive with several outputs; ``vjp`` gets one gradient (or None) per output."""
    tape = Tape._active
    track = tape is not None and any(t.requires_grad for t in inputs)
    results = [Tensor._wrap(o, track) for o in outs]
    if track:
        tape.entries.append((tuple(results), tuple(inputs), vjp))
    return results


def _named_params(params) -> Iterable[tuple[str, Tensor]]:
    if params is None:
        return []
    if hasattr(params, "trainable_items"):
        return params.trainable_items()
    return params.items()


def backward(tape: Tape, loss: Tensor, params=None) -> dict[str, np.ndarray]:
    """Reverse-mode sweep over ``tape`` starting from a scalar ``loss``.

    Returns a gradient array per trainable parameter of ``params`` (defaults to
    the store the tape was opened with). Parameters the loss does not reach get
    zero gradients.
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for out, inputs, vjp in reversed(tape.entries):
        if isinstance(out, tuple):
            g = [grads.pop(id(o), None) for o in out]
            if all(gi is None for gi in g):
                continue
        else:
            g = grads.pop(id(out), None)
            if g is None:
                continue
        for t, gi in zip(inputs, vjp(g)):
            if gi is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
    store = tape.params if params is None else params
    result = {}
    for name, p in _named_params(store):
        g = grads.get(id(p))
        result[name] = np.zeros_like(p.data) if g is None else np.asarray(g, dtype=np.float64)
    return result


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# -- linear algebra --------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, numpy-style batch broadcasting.

    A 1-d left operand is treated as a row vector and a 1-d result is returned.
    """
    if a.ndim == 0 or b.ndim < 2:
        raise DimensionError(f"matmul: unsupported operand shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions differ for {a.shape} and {b.shape}")
    B = b.data
    vec = a.ndim == 1
    A = a.data[None, :] if vec else a.data
    out = A @ B

    def vjp(g):
        if vec:
            g = g[..., None, :]
        ga = _unbroadcast(g @ np.swapaxes(B, -1, -2), A.shape)
        if B.ndim == 2:
            # fold all batch axes into rows: one GEMM instead of a batched one plus a sum
            gb = A.reshape(-1, A.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = _unbroadcast(np.swapaxes(A, -1, -2) @ g, B.shape)
        return ga.reshape(a.shape), gb

    return _record(out[..., 0, :] if vec else out, (a, b), vjp)


def swap_last(x: Tensor) -> Tensor:
    """Transpose of the last two axes."""
    out = np.swapaxes(x.data, -1, -2)
    return _record(out, (x,), lambda g: (np.swapaxes(g, -1, -2),))


# -- pointwise -------------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form cannot overflow
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    return _record(s, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    return _record(t, (x,), lambda g: (g * (1.0 - t * t),))


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _record(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return _record(a.data - b.data, (a, b), lambda g: (g, -g))


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("hadamard", a, b)
    A, B = a.data, b.data
    return _record(A * B, (a, b), lambda g: (g * B, g * A))


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    """Add a vector along the last axis of ``x``."""
    if b.ndim != 1 or x.shape[-1] != b.shape[0]:
        raise DimensionError(f"bias_add: cannot add bias {b.shape} to {x.shape}")
    axes = tuple(range(x.ndim - 1))
    return _record(x.data + b.data, (x, b), lambda g: (g, g.sum(axis=axes)))


def scale(x: Tensor, c: float) -> Tensor:
    return _record(x.data * c, (x,), lambda g: (g * c,))


_UNARY = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}
_BINARY = {"add": add, "sub": sub, "hadamard": hadamard}


def elementwise(op: str, *args: Tensor) -> Tensor:
    """Dispatch a named pointwise primitive (relu, sigmoid, tanh, add, sub, hadamard)."""
    if op in _UNARY:
        if len(args) != 1:
            raise TypeError(f"{op} takes one operand, got {len(args)}")
        return _UNARY[op](args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise TypeError(f"{op} takes two operands, got {len(args)}")
        return _BINARY[op](*args)
    raise ValueError(f"unknown elementwise op {op!r}")


# -- normalisation ---------------------------------------------------------


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis with max subtraction."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _record(s, (x,), vjp)


def log_softmax_rows(x: Tensor) -> Tensor:
    z = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    s = np.exp(out)

    def vjp(g):
        return (g - s * g.sum(axis=-1, keepdims=True),)

    return _record(out, (x,), vjp)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LN_EPS) -> Tensor:
    """Normalise each row (last axis) to zero mean and unit variance, then affine."""
    n = x.shape[-1]
    if n < 2:
        raise DimensionError(f"layer_norm needs at least 2 features, got {n}")
    if gain.shape != (n,) or bias.shape != (n,):
        raise DimensionError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match width {n}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    G = gain.data
    out = xhat * G + bias.data
    axes = tuple(range(x.ndim - 1))

    def vjp(g):
        gx_hat = g * G
        gx = inv * (
            gx_hat
            - gx_hat.mean(axis=-1, keepdims=True)
            - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True)
        )
        return gx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return _record(out, (x, gain, bias), vjp)


# -- structural ------------------------------------------------------------


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    src = x.shape
    out = x.data.reshape(shape)
    return _record(out, (x,), lambda g: (g.reshape(src),))


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    xs = list(xs)
    if not xs:
        raise DimensionError("concat of an empty list")
    nd = xs[0].ndim
    ax = axis % nd
    for t in xs[1:]:
        if t.ndim != nd or any(
            t.shape[i] != xs[0].shape[i] for i in range(nd) if i != ax
        ):
            raise DimensionError(
                f"concat: shapes {[u.shape for u in xs]} disagree off axis {axis}"
            )
    out = np.concatenate([t.data for t in xs], axis=ax)
    bounds = np.cumsum([t.shape[ax] for t in xs])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=ax))

    return _record(out, xs, vjp)


def stack(xs: Sequence[Tensor], axis: int = 0) -> Tensor:
    xs = list(xs)
    if not xs:
        raise DimensionError("stack of an empty list")
    for t in xs[1:]:
        if t.shape != xs[0].shape:
            raise DimensionError(f"stack: shapes {[u.shape for u in xs]} differ")
    out = np.stack([t.data for t in xs], axis=axis)
    ax = axis % out.ndim

    def vjp(g):
        return tuple(np.take(g, i, axis=ax) for i in range(len(xs)))

    return _record(out, xs, vjp)


def split(x: Tensor, sections: Sequence[int], axis: int = -1) -> list[Tensor]:
    """Cut ``x`` along ``axis`` at the given boundaries (as ``np.split``)."""
    ax = axis % x.ndim
    parts = np.split(x.data, list(sections), axis=ax)
    shapes = [p.shape for p in parts]

    def vjp(gs):
        full = [np.zeros(sh) if g is None else g for g, sh in zip(gs, shapes)]
        return (np.concatenate(full, axis=ax),)

    return _record_multi(parts, (x,), vjp)


def unstack(x: Tensor, axis: int = 0) -> list[Tensor]:
    """Slices of ``x`` along ``axis`` with that axis removed."""
    ax = axis % x.ndim
    parts = [np.take(x.data, i, axis=ax) for i in range(x.shape[ax])]
    src = x.shape

    def vjp(gs):
        full = np.zeros(src)
        view = np.moveaxis(full, ax, 0)
        for i, g in enumerate(gs):
            if g is not None:
                view[i] = g
        return (full,)

    return _record_multi(parts, (x,), vjp)


def _is_basic_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(
        isinstance(k, (int, np.integer, slice)) or k is Ellipsis or k is None for k in parts
    )


def take(x: Tensor, key) -> Tensor:
    """Basic or fancy indexing; the gradient scatters back with accumulation."""
    out = x.data[key]
    src = x.shape
    basic = _is_basic_index(key)

    def vjp(g):
        full = np.zeros(src)
        if basic:
            full[key] = g
        else:
            np.add.at(full, key, g)
        return (full,)

    return _record(out, (x,), vjp)


# -- reductions and losses -------------------------------------------------


def tsum(x: Tensor) -> Tensor:
    src = x.shape
    return _record(x.data.sum(), (x,), lambda g: (np.broadcast_to(g, src).copy(),))


def mean(x: Tensor) -> Tensor:
    n = x.data.size
    return scale(tsum(x), 1.0 / n)


def sum_squares(x: Tensor) -> Tensor:
    X = x.data
    return _record((X * X).sum(), (x,), lambda g: (2.0 * g * X,))


def cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits).

    ``logits`` is (N, L). Computed through log-softmax, which equals the
    cross-entropy of the softmax output but stays finite for saturated rows.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DimensionError(
            f"cross_entropy: logits {logits.shape} vs labels {labels.shape}"
        )
    L = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= L):
        raise ValueError(f"label outside 0..{L - 1}")
    logp = log_softmax_rows(logits)
    picked = take(logp, (np.arange(labels.size), labels))
    return scale(tsum(picked), -1.0 / max(labels.size, 1))


def is_finite(x: Tensor) -> bool:
    return bool(np.isfinite(x.data).all())


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))
