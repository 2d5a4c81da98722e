# cyclereward/services/finetune/losses.py
from __future__ import annotations

from typing import Optional

from cyclereward.services.autograd import Tensor, ops
from cyclereward.services.rewards.losses import mse


def diffusion_loss(eps_hat: Tensor, eps: Tensor) -> Tensor:
    """Noise-prediction MSE at one timestep."""
    return mse(eps, eps_hat)


def total_loss(l_train: Tensor, l_reward: Optional[Tensor], lam: float, active: bool,
               reward_only: bool = False) -> Optional[Tensor]:
    """
    Combined objective of one step.

    Combined: l_train + lam * l_reward while the reward gate is open, l_train
    otherwise. Reward-only: lam * l_reward while the gate is open, None (no
    update) otherwise. lam == 0 drops the reward term from the graph.
    """
    use_reward = active and l_reward is not None and lam != 0.0
    if reward_only:
        return ops.mul(l_reward, lam) if use_reward else None
    if not use_reward:
        return l_train
    return ops.add(l_train, ops.mul(l_reward, lam))
