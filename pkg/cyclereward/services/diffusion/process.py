# cyclereward/services/diffusion/process.py
"""Forward corruption, single-step x0 estimate and the ancestral step."""
from __future__ import annotations

import math

from cyclereward.core.errors import ShapeMismatchError
from cyclereward.services.autograd import Tensor, ops
from cyclereward.services.diffusion.schedule import NoiseSchedule


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(op, a.shape, b.shape)


def forward_diffuse(x0: Tensor, t: int, eps: Tensor, s: NoiseSchedule) -> Tensor:
    """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps"""
    _same_shape("forward_diffuse", x0, eps)
    t = s.check_t(t)
    ab = float(s.alpha_bar[t])
    return ops.add(ops.mul(x0, math.sqrt(ab)), ops.mul(eps, math.sqrt(1.0 - ab)))


def predict_x0_single_step(x_t: Tensor, eps_hat: Tensor, t: int, s: NoiseSchedule,
                           clamp: bool = True) -> Tensor:
    """
    x0' = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t), clamped to [-1, 1].

    Uses the cumulative alpha_bar: that is the form that inverts
    forward_diffuse exactly when eps_hat is the true noise.
    """
    _same_shape("predict_x0_single_step", x_t, eps_hat)
    t = s.check_t(t)
    ab = float(s.alpha_bar[t])
    x0 = ops.mul(ops.sub(x_t, ops.mul(eps_hat, math.sqrt(1.0 - ab))), 1.0 / math.sqrt(ab))
    return ops.clip(x0, -1.0, 1.0) if clamp else x0


def ddpm_step(x_t: Tensor, eps_hat: Tensor, t: int, z: Tensor, s: NoiseSchedule) -> Tensor:
    """x_{t-1} = 1/sqrt(alpha_t) (x_t - (1 - alpha_t)/sqrt(1 - abar_t) eps_hat) + sigma_t z"""
    _same_shape("ddpm_step", x_t, eps_hat)
    _same_shape("ddpm_step", x_t, z)
    t = s.check_t(t)
    a, ab = float(s.alpha[t]), float(s.alpha_bar[t])
    coef = (1.0 - a) / math.sqrt(1.0 - ab)
    mean = ops.mul(ops.sub(x_t, ops.mul(eps_hat, coef)), 1.0 / math.sqrt(a))
    if t == 1:
        z = Tensor.zeros(x_t.shape)
    # sigma_1 == 0 as well, so the last step adds an exact zero; every step
    # keeps the same node layout on the tape.
    return ops.add(mean, ops.mul(z, float(s.posterior_sigma[t])))
