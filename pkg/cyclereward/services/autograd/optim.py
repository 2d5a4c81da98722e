# cyclereward/services/autograd/optim.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from cyclereward.services.autograd.tensor import Tensor


@dataclass
class Adam:
    """
    Adam with bias correction. Moment buffers are keyed by parameter name, so
    parameter tensors can be replaced between steps.
    """
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    steps: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: Mapping[str, Tensor], grads: Mapping[str, Optional[Tensor]]) -> dict[str, Tensor]:
        """Returns the updated tensors; names without a gradient are left out."""
        self.steps += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.steps
        c2 = 1.0 - b2 ** self.steps
        updated: dict[str, Tensor] = {}
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                continue
            gd = g.data
            m = b1 * self.m.get(name, 0.0) + (1.0 - b1) * gd
            v = b2 * self.v.get(name, 0.0) + (1.0 - b2) * gd * gd
            self.m[name], self.v[name] = m, v
            new = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            updated[name] = Tensor.wrap(new, requires_grad=True)
        return updated
