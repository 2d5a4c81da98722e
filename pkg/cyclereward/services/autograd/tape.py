# cyclereward/services/autograd/tape.py
"""
Define-by-run gradient tape.

Ops executed while a tape is active (`with Tape() as tape:`) append one node
each, provided at least one input requires grad. The node list is append-only,
so its order is already a topological order; `backward` walks it in reverse.
"""
from __future__ import annotations

import contextvars
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from cyclereward.core.errors import TapeError
from cyclereward.schemas.reports import TapeStats
from cyclereward.services.autograd.tensor import Tensor

_ACTIVE: contextvars.ContextVar[Optional["Tape"]] = contextvars.ContextVar("active_tape", default=None)


@dataclass
class TapeNode:
    op: str
    inputs: tuple[Optional[int], ...]   # None for inputs that do not require grad
    output: int
    saved: tuple[np.ndarray, ...]
    backward: Callable[[np.ndarray], tuple[Optional[np.ndarray], ...]]


class GradientMap(dict):
    """node_id -> Tensor for every requires-grad leaf the loss depends on."""

    def of(self, t: Tensor) -> Optional[Tensor]:
        if t.node_id is None:
            return None
        return self.get(t.node_id)


@dataclass
class Tape:
    nodes: list[TapeNode] = field(default_factory=list)
    live: bool = True
    _produced: set = field(default_factory=set, repr=False)
    _node_count: int = 0
    _saved_elements: int = 0
    _token: Optional[contextvars.Token] = field(default=None, repr=False)

    # ---- activation ------------------------------------------------------

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        if self._token is not None:
            _ACTIVE.reset(self._token)
            self._token = None

    # ---- recording -------------------------------------------------------

    def record(self, op: str, inputs: tuple[Optional[int], ...], output: int,
               saved: tuple[np.ndarray, ...], backward) -> None:
        if not self.live:
            raise TapeError(f"cannot record '{op}' on a consumed tape")
        self.nodes.append(TapeNode(op, inputs, output, saved, backward))
        self._produced.add(output)
        self._node_count += 1
        self._saved_elements += sum(int(a.size) for a in saved)

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def saved_elements(self) -> int:
        return self._saved_elements

    def stats(self) -> TapeStats:
        return TapeStats(tape_nodes=self._node_count, saved_elements=self._saved_elements)

    # ---- reverse pass ----------------------------------------------------

    def backward(self, loss: Tensor) -> GradientMap:
        if not self.live:
            raise TapeError("tape already consumed by a previous backward()")
        if loss.size != 1 or loss.ndim != 0:
            raise TapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
        self.live = False

        grads: GradientMap = GradientMap()
        if not loss.requires_grad:
            self._release()
            return grads

        adj: dict[int, np.ndarray] = {loss.node_id: np.ones((), dtype=np.float64)}
        leaves: set[int] = set()
        for node in reversed(self.nodes):
            g = adj.pop(node.output, None)
            if g is None:
                continue
            in_grads = node.backward(g)
            for nid, gi in zip(node.inputs, in_grads):
                if nid is None or gi is None:
                    continue
                if nid in adj:
                    adj[nid] = adj[nid] + gi
                else:
                    adj[nid] = gi
                if nid not in self._produced:
                    leaves.add(nid)

        for nid in leaves:
            if nid in adj:
                grads[nid] = Tensor.wrap(np.asarray(adj[nid], dtype=np.float64))
        self._release()
        return grads

    def _release(self) -> None:
        # counts survive for tape_stats(); saved activations do not
        self.nodes = []


def active_tape() -> Optional[Tape]:
    return _ACTIVE.get()


def tape_stats(tape: Optional[Tape] = None) -> TapeStats:
    tape = tape if tape is not None else active_tape()
    if tape is None:
        return TapeStats()
    return tape.stats()
