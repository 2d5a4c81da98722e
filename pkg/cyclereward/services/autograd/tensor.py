# cyclereward/services/autograd/tensor.py
from __future__ import annotations

import itertools
from typing import Iterable, Optional, Union

import numpy as np

from cyclereward.core.errors import ShapeMismatchError

# Node ids are process-wide so two tapes never hand out the same handle.
_node_ids = itertools.count(1)


def next_node_id() -> int:
    return next(_node_ids)


Operand = Union["Tensor", float, int]


class Tensor:
    """
    Immutable dense float64 array plus the bookkeeping reverse-mode needs.

    A tensor that requires grad carries a `node_id`. Leaves get theirs at
    construction; op results get the id of the tape node that produced them.
    """

    __slots__ = ("data", "requires_grad", "node_id")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        arr.setflags(write=False)
        self.data: np.ndarray = arr
        self.requires_grad: bool = bool(requires_grad)
        self.node_id: Optional[int] = next_node_id() if requires_grad else None

    @classmethod
    def wrap(cls, arr: np.ndarray, requires_grad: bool = False, node_id: Optional[int] = None) -> "Tensor":
        # no copy: caller hands over ownership of a fresh array
        t = cls.__new__(cls)
        if arr.dtype != np.float64:
            arr = arr.astype(np.float64)
        arr.setflags(write=False)
        t.data = arr
        t.requires_grad = requires_grad
        t.node_id = node_id if node_id is not None else (next_node_id() if requires_grad else None)
        return t

    @classmethod
    def parameter(cls, data) -> "Tensor":
        return cls(data, requires_grad=True)

    @classmethod
    def zeros(cls, shape: Iterable[int]) -> "Tensor":
        return cls.wrap(np.zeros(tuple(shape)))

    # ---- views -----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError("item", self.shape, (), "needs a one-element tensor")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor.wrap(self.data, requires_grad=False)

    def with_grad(self, flag: bool) -> "Tensor":
        """Same values, new handle with the requested requires_grad flag."""
        return Tensor.wrap(self.data, requires_grad=flag)

    def __repr__(self) -> str:
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # ---- arithmetic sugar --------------------------------------------------

    def __add__(self, other: Operand) -> "Tensor":
        from .ops import add
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        from .ops import add
        return add(other, self)

    def __sub__(self, other: Operand) -> "Tensor":
        from .ops import sub
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        from .ops import sub
        return sub(other, self)

    def __mul__(self, other: Operand) -> "Tensor":
        from .ops import mul
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        from .ops import mul
        return mul(other, self)

    def __truediv__(self, other: Operand) -> "Tensor":
        from .ops import div
        return div(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from .ops import matmul
        return matmul(self, other)

    def __neg__(self) -> "Tensor":
        from .ops import mul
        return mul(self, -1.0)


def as_tensor(x: Operand) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor.wrap(np.array(float(x)))
