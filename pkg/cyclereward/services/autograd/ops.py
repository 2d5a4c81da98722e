# cyclereward/services/autograd/ops.py
"""
Differentiable primitives.

Each op is a `Function` subclass: `forward` works on raw float64 arrays and
stores what `backward` needs via `save`; `backward` maps the output gradient
to one gradient per input (None where the input does not need one).

Broadcasting is limited to scalar (0-d) operands and the explicit
`broadcast` op for per-channel vectors.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from cyclereward.core.errors import NumericalError, ShapeMismatchError
from cyclereward.services.autograd.tape import active_tape
from cyclereward.services.autograd.tensor import Operand, Tensor, as_tensor, next_node_id

DIV_EPS = 1e-12


class Function:
    name = "op"

    def __init__(self, needs: tuple[bool, ...], **kwargs):
        self.needs = needs
        self.saved: tuple[np.ndarray, ...] = ()
        self.kw = kwargs

    def save(self, *arrays: np.ndarray) -> None:
        self.saved = tuple(a for a in arrays if a is not None)

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs) -> Tensor:
        needs = tuple(t.requires_grad for t in inputs)
        fn = cls(needs, **kwargs)
        out = fn.forward(*(t.data for t in inputs))
        if not np.all(np.isfinite(out)):
            raise NumericalError(cls.name, "non-finite value in output")
        tape = active_tape()
        if tape is not None and tape.live and any(needs):
            nid = next_node_id()
            tape.record(
                cls.name,
                tuple(t.node_id if t.requires_grad else None for t in inputs),
                nid,
                fn.saved,
                fn.backward,
            )
            return Tensor.wrap(out, requires_grad=True, node_id=nid)
        return Tensor.wrap(out)


def _check_binary(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    raise ShapeMismatchError(op, a.shape, b.shape)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


# ---- elementwise binary --------------------------------------------------


class Add(Function):
    name = "add"

    def forward(self, a, b):
        _check_binary(self.name, a, b)
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, g):
        sa, sb = self.shapes
        return (_unbroadcast(g, sa) if self.needs[0] else None,
                _unbroadcast(g, sb) if self.needs[1] else None)


class Sub(Function):
    name = "sub"

    def forward(self, a, b):
        _check_binary(self.name, a, b)
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, g):
        sa, sb = self.shapes
        return (_unbroadcast(g, sa) if self.needs[0] else None,
                _unbroadcast(-g, sb) if self.needs[1] else None)


class Mul(Function):
    name = "mul"

    def forward(self, a, b):
        _check_binary(self.name, a, b)
        self.shapes = (a.shape, b.shape)
        self.a = a if self.needs[1] else None
        self.b = b if self.needs[0] else None
        self.save(self.a, self.b)
        return a * b

    def backward(self, g):
        sa, sb = self.shapes
        ga = _unbroadcast(g * self.b, sa) if self.needs[0] else None
        gb = _unbroadcast(g * self.a, sb) if self.needs[1] else None
        return ga, gb


class Div(Function):
    name = "div"

    def forward(self, a, b):
        _check_binary(self.name, a, b)
        if np.any(np.abs(b) < DIV_EPS):
            raise NumericalError(self.name, f"denominator magnitude below {DIV_EPS:g}")
        self.shapes = (a.shape, b.shape)
        self.a, self.b = a, b
        self.save(b, a if self.needs[1] else None)
        return a / b

    def backward(self, g):
        sa, sb = self.shapes
        ga = _unbroadcast(g / self.b, sa) if self.needs[0] else None
        gb = _unbroadcast(-g * self.a / (self.b * self.b), sb) if self.needs[1] else None
        return ga, gb


class MatMul(Function):
    name = "matmul"

    def forward(self, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatchError(self.name, a.shape, b.shape, "expects (m,k) @ (k,n)")
        self.a = a if self.needs[1] else None
        self.b = b if self.needs[0] else None
        self.save(self.a, self.b)
        return a @ b

    def backward(self, g):
        ga = g @ self.b.T if self.needs[0] else None
        gb = self.a.T @ g if self.needs[1] else None
        return ga, gb


# ---- convolutions --------------------------------------------------------


def _im2col3x3(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))       # (C, H, W, 3, 3)
    return win.transpose(0, 3, 4, 1, 2).reshape(c * 9, h * w)


def _col2im3x3(cols: np.ndarray, c: int, h: int, w: int) -> np.ndarray:
    cols = cols.reshape(c, 3, 3, h, w)
    xp = np.zeros((c, h + 2, w + 2))
    for ky in range(3):
        for kx in range(3):
            xp[:, ky:ky + h, kx:kx + w] += cols[:, ky, kx]
    return xp[:, 1:-1, 1:-1]


class Conv2d3x3(Function):
    """Stride-1 cross-correlation with zero padding 1; optional per-channel bias."""
    name = "conv2d3x3"

    def forward(self, x, w, b=None):
        if x.ndim != 3 or w.ndim != 4 or w.shape[2:] != (3, 3) or w.shape[1] != x.shape[0]:
            raise ShapeMismatchError(self.name, x.shape, w.shape, "expects C_in x H x W and C_out x C_in x 3 x 3")
        if b is not None and b.shape != (w.shape[0],):
            raise ShapeMismatchError(self.name, w.shape, b.shape, "bias must be (C_out,)")
        c_in, h, wd = x.shape
        c_out = w.shape[0]
        self.dims = (c_in, h, wd, c_out)
        cols = _im2col3x3(x)
        w2 = w.reshape(c_out, c_in * 9)
        self.cols = cols if self.needs[1] else None
        self.w2 = w2 if self.needs[0] else None
        self.save(self.cols, self.w2)
        out = w2 @ cols
        if b is not None:
            out = out + b[:, None]
        return out.reshape(c_out, h, wd)

    def backward(self, g):
        c_in, h, wd, c_out = self.dims
        g2 = g.reshape(c_out, h * wd)
        gx = _col2im3x3(self.w2.T @ g2, c_in, h, wd) if self.needs[0] else None
        gw = (g2 @ self.cols.T).reshape(c_out, c_in, 3, 3) if self.needs[1] else None
        grads = [gx, gw]
        if len(self.needs) == 3:
            grads.append(g2.sum(axis=1) if self.needs[2] else None)
        return tuple(grads)


class Conv2d1x1(Function):
    name = "conv2d1x1"

    def forward(self, x, w, b=None):
        if x.ndim != 3 or w.ndim != 2 or w.shape[1] != x.shape[0]:
            raise ShapeMismatchError(self.name, x.shape, w.shape, "expects C_in x H x W and C_out x C_in")
        if b is not None and b.shape != (w.shape[0],):
            raise ShapeMismatchError(self.name, w.shape, b.shape, "bias must be (C_out,)")
        c_in, h, wd = x.shape
        self.dims = (c_in, h, wd, w.shape[0])
        flat = x.reshape(c_in, h * wd)
        self.flat = flat if self.needs[1] else None
        self.w = w if self.needs[0] else None
        self.save(self.flat, self.w)
        out = w @ flat
        if b is not None:
            out = out + b[:, None]
        return out.reshape(w.shape[0], h, wd)

    def backward(self, g):
        c_in, h, wd, c_out = self.dims
        g2 = g.reshape(c_out, h * wd)
        gx = (self.w.T @ g2).reshape(c_in, h, wd) if self.needs[0] else None
        gw = g2 @ self.flat.T if self.needs[1] else None
        grads = [gx, gw]
        if len(self.needs) == 3:
            grads.append(g2.sum(axis=1) if self.needs[2] else None)
        return tuple(grads)


# ---- elementwise unary ---------------------------------------------------


class ReLU(Function):
    name = "relu"

    def forward(self, x):
        self.mask = x > 0
        self.save(self.mask)
        return np.where(self.mask, x, 0.0)

    def backward(self, g):
        return (g * self.mask,)


class Sigmoid(Function):
    name = "sigmoid"

    def forward(self, x):
        s = 0.5 * (1.0 + np.tanh(0.5 * x))
        self.s = s
        self.save(s)
        return s

    def backward(self, g):
        return (g * self.s * (1.0 - self.s),)


class Log(Function):
    name = "log"

    def forward(self, x):
        if np.any(x <= 0):
            raise NumericalError(self.name, "log of a non-positive value")
        self.x = x
        self.save(x)
        return np.log(x)

    def backward(self, g):
        return (g / self.x,)


class Sqrt(Function):
    name = "sqrt"

    def forward(self, x):
        if np.any(x < 0):
            raise NumericalError(self.name, "sqrt of a negative value")
        out = np.sqrt(x)
        self.out = out
        self.save(out)
        return out

    def backward(self, g):
        safe = np.where(self.out > 0, self.out, 1.0)
        return (np.where(self.out > 0, g / (2.0 * safe), 0.0),)


class Clip(Function):
    name = "clip"

    def forward(self, x):
        lo, hi = self.kw["lo"], self.kw["hi"]
        self.mask = (x >= lo) & (x <= hi)
        self.save(self.mask)
        return np.clip(x, lo, hi)

    def backward(self, g):
        return (g * self.mask,)


class Softmax(Function):
    name = "softmax"

    def forward(self, x):
        axis = self.kw.get("axis", 0)
        z = np.exp(x - x.max(axis=axis, keepdims=True))
        s = z / z.sum(axis=axis, keepdims=True)
        self.s = s
        self.save(s)
        return s

    def backward(self, g):
        axis = self.kw.get("axis", 0)
        return (self.s * (g - (g * self.s).sum(axis=axis, keepdims=True)),)


class LogSoftmax(Function):
    name = "log_softmax"

    def forward(self, x):
        axis = self.kw.get("axis", 0)
        shifted = x - x.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        out = shifted - lse
        self.s = np.exp(out)
        self.save(self.s)
        return out

    def backward(self, g):
        axis = self.kw.get("axis", 0)
        return (g - self.s * g.sum(axis=axis, keepdims=True),)


# ---- reductions and shape ops --------------------------------------------


class Mean(Function):
    name = "mean"

    def forward(self, x):
        self.shape = x.shape
        return np.asarray(x.mean())

    def backward(self, g):
        n = int(np.prod(self.shape)) if self.shape else 1
        return (np.full(self.shape, float(g) / n),)


class Sum(Function):
    name = "sum"

    def forward(self, x):
        self.shape = x.shape
        axis, keepdims = self.kw.get("axis"), self.kw.get("keepdims", False)
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, g):
        axis, keepdims = self.kw.get("axis"), self.kw.get("keepdims", False)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, self.shape).copy(),)


class Broadcast(Function):
    """Scalar -> any shape, or per-channel (C,) -> (C, H, W)."""
    name = "broadcast"

    def forward(self, x):
        shape = tuple(self.kw["shape"])
        self.src = x.shape
        if x.ndim == 0 or x.size == 1:
            return np.full(shape, float(x.reshape(-1)[0]))
        if x.ndim == 1 and len(shape) == 3 and shape[0] == x.shape[0]:
            return np.broadcast_to(x[:, None, None], shape).copy()
        raise ShapeMismatchError(self.name, x.shape, shape, "only scalar or per-channel broadcast")

    def backward(self, g):
        if len(self.src) == 1 and g.ndim == 3 and self.src[0] == g.shape[0] and self.src[0] != 1:
            return (g.sum(axis=(1, 2)),)
        return (np.asarray(g.sum()).reshape(self.src),)


class Reshape(Function):
    name = "reshape"

    def forward(self, x):
        shape = tuple(self.kw["shape"])
        if int(np.prod(shape)) != x.size:
            raise ShapeMismatchError(self.name, x.shape, shape)
        self.src = x.shape
        return x.reshape(shape).copy()

    def backward(self, g):
        return (g.reshape(self.src),)


class PadEdge(Function):
    """Replicate-pad the two spatial axes of C x H x W by one pixel."""
    name = "pad_edge"

    def forward(self, x):
        if x.ndim != 3:
            raise ShapeMismatchError(self.name, x.shape, (0, 0, 0), "expects C x H x W")
        self.shape = x.shape
        return np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="edge")

    def backward(self, gp):
        gx = gp[:, 1:-1, 1:-1].copy()
        gx[:, 0, :] += gp[:, 0, 1:-1]
        gx[:, -1, :] += gp[:, -1, 1:-1]
        gx[:, :, 0] += gp[:, 1:-1, 0]
        gx[:, :, -1] += gp[:, 1:-1, -1]
        gx[:, 0, 0] += gp[:, 0, 0]
        gx[:, 0, -1] += gp[:, 0, -1]
        gx[:, -1, 0] += gp[:, -1, 0]
        gx[:, -1, -1] += gp[:, -1, -1]
        return (gx,)


class Crop(Function):
    """Drop a one-pixel spatial border of C x H x W."""
    name = "crop"

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] < 3 or x.shape[2] < 3:
            raise ShapeMismatchError(self.name, x.shape, (0, 3, 3), "needs at least 3 x 3 spatial extent")
        self.shape = x.shape
        return x[:, 1:-1, 1:-1].copy()

    def backward(self, g):
        gx = np.zeros(self.shape)
        gx[:, 1:-1, 1:-1] = g
        return (gx,)


# ---- public functional API -----------------------------------------------


def add(a: Operand, b: Operand) -> Tensor:
    return Add.apply(as_tensor(a), as_tensor(b))


def sub(a: Operand, b: Operand) -> Tensor:
    return Sub.apply(as_tensor(a), as_tensor(b))


def mul(a: Operand, b: Operand) -> Tensor:
    return Mul.apply(as_tensor(a), as_tensor(b))


def div(a: Operand, b: Operand) -> Tensor:
    return Div.apply(as_tensor(a), as_tensor(b))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def conv2d3x3(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    return Conv2d3x3.apply(x, w) if b is None else Conv2d3x3.apply(x, w, b)


def conv2d1x1(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    return Conv2d1x1.apply(x, w) if b is None else Conv2d1x1.apply(x, w, b)


def relu(x: Tensor) -> Tensor:
    return ReLU.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def log(x: Tensor) -> Tensor:
    return Log.apply(x)


def sqrt(x: Tensor) -> Tensor:
    return Sqrt.apply(x)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    return Clip.apply(x, lo=lo, hi=hi)


def softmax(x: Tensor, axis: int = 0) -> Tensor:
    return Softmax.apply(x, axis=axis)


def log_softmax(x: Tensor, axis: int = 0) -> Tensor:
    return LogSoftmax.apply(x, axis=axis)


def mean(x: Tensor) -> Tensor:
    return Mean.apply(x)


def reduce_sum(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def broadcast(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Broadcast.apply(x, shape=tuple(shape))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def pad_edge(x: Tensor) -> Tensor:
    return PadEdge.apply(x)


def crop(x: Tensor) -> Tensor:
    return Crop.apply(x)


def mean_of(terms: Sequence[Tensor]) -> Tensor:
    """Average of scalar tensors (batch reduction)."""
    if not terms:
        raise ValueError("mean_of needs at least one term")
    acc = terms[0]
    for t in terms[1:]:
        acc = add(acc, t)
    return acc if len(terms) == 1 else mul(acc, 1.0 / len(terms))


sum = reduce_sum  # noqa: A001  (matches the op table's name)

__all__ = [
    "add", "sub", "mul", "div", "matmul", "conv2d3x3", "conv2d1x1", "relu", "sigmoid",
    "log", "sqrt", "clip", "softmax", "log_softmax", "mean", "reduce_sum", "sum",
    "broadcast", "reshape", "pad_edge", "crop", "mean_of", "Function",
]
