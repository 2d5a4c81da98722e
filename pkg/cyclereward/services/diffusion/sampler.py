# cyclereward/services/diffusion/sampler.py
from __future__ import annotations

from typing import Protocol, Sequence

from cyclereward.services.autograd import Tensor
from cyclereward.services.diffusion.noise import keyed_normal
from cyclereward.services.diffusion.process import ddpm_step
from cyclereward.services.diffusion.schedule import NoiseSchedule

X_T_STREAM = 0


class NoisePredictor(Protocol):
    def __call__(self, x: Tensor, t: int, c_t: Tensor, c_v: Tensor) -> Tensor: ...


def sample_full(model: NoisePredictor, c_v: Tensor, c_t: Tensor, s: NoiseSchedule, seed: int,
                shape: Sequence[int] | None = None) -> Tensor:
    """
    Ancestral sampling from x_T ~ N(0, I) down to x_0.

    x_T is drawn from stream 0 and the step-t noise from stream t, both keyed
    by `seed`, so the output is a pure function of (model, c_v, c_t, seed).
    `shape` defaults to one channel at the condition's spatial size.
    """
    if shape is None:
        shape = (1,) + tuple(c_v.shape[-2:])
    x = Tensor.wrap(keyed_normal(seed, X_T_STREAM, shape))
    for i in range(s.T, 0, -1):
        eps_hat = model(x, int(s.timesteps[i]), c_t, c_v)
        z = Tensor.wrap(keyed_normal(seed, i, shape)) if i > 1 else Tensor.zeros(shape)
        x = ddpm_step(x, eps_hat, i, z, s)
    return x
