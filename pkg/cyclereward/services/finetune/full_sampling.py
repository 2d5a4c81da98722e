# cyclereward/services/finetune/full_sampling.py
"""
Reward fine-tuning through the whole sampling chain, the baseline whose
gradient tape grows with the number of denoising steps kept.

The reward chain (x_T -> k ancestral steps -> reward model -> consistency
loss) and the diffusion loss are recorded on two tapes, one after the other;
their gradients are summed. The reported TapeStats are those of the larger
tape, which is what has to be retained at once.
"""
from __future__ import annotations

import logging
import time
from typing import Sequence

import numpy as np

from cyclereward.core.errors import ConfigError, TapeBudgetError
from cyclereward.schemas.common import Strategy
from cyclereward.schemas.config import TrainConfig
from cyclereward.schemas.reports import StepReport, TapeStats
from cyclereward.services.autograd import Adam, GradientMap, Tape, Tensor, ops
from cyclereward.services.data.dataset import ConditionedSample, Dataset, condition_input
from cyclereward.services.denoiser.model import ControlledDenoiser, caption_embedding, denoiser_forward, freeze_base
from cyclereward.services.denoiser.params import DenoiserParams
from cyclereward.services.diffusion.process import forward_diffuse
from cyclereward.services.diffusion.sampler import sample_full
from cyclereward.services.diffusion.schedule import NoiseSchedule, respace
from cyclereward.services.finetune.losses import diffusion_loss
from cyclereward.services.finetune.trainer import (
    StepResult,
    TrainResult,
    check_finite,
    draw_step,
    make_optimizer,
    resolve_lambda,
    reward_target,
    schedule_for,
)
from cyclereward.services.rewards.losses import consistency_loss
from cyclereward.services.rewards.spec import RewardSpec

log = logging.getLogger("finetune")

MAX_SAMPLING_STEPS = 10


def check_sampling_budget(t_sample: int) -> None:
    if t_sample > MAX_SAMPLING_STEPS:
        raise TapeBudgetError(
            f"full-sampling fine-tuning keeps the tape of every denoising step; cost grows linearly "
            f"with the step count, refusing T_sample={t_sample} > {MAX_SAMPLING_STEPS}")
    if t_sample < 1:
        raise ConfigError(f"T_sample must be >= 1, got {t_sample}")


def _sum_grads(params: DenoiserParams, g_train: GradientMap, g_reward: GradientMap, lam: float) -> dict:
    out = {}
    for name, p in params.trainable().items():
        gt, gr = g_train.of(p), g_reward.of(p)
        if gt is None and gr is None:
            out[name] = None
            continue
        total = np.zeros(p.shape) if gt is None else gt.data.copy()
        if gr is not None:
            total = total + lam * gr.data
        out[name] = Tensor.wrap(total)
    return out


def full_sampling_step(params: DenoiserParams, opt: Adam, batch: Sequence[ConditionedSample], t: int,
                       eps: np.ndarray, chain_seeds: Sequence[int], s: NoiseSchedule, num_classes: int,
                       spec: RewardSpec, lam: float, t_sample: int, it: int = 0) -> StepResult:
    check_sampling_budget(t_sample)
    t = s.check_t(t)
    chain = respace(s, t_sample)
    model = ControlledDenoiser(params)

    start = time.perf_counter()
    with Tape() as reward_tape:
        terms = []
        for j, sample in enumerate(batch):
            c_v = Tensor.wrap(condition_input(sample, num_classes))
            c_t = caption_embedding(params, sample.caption_id)
            x0_hat = sample_full(model, c_v, c_t, chain, int(chain_seeds[j]), shape=sample.x0.shape)
            terms.append(consistency_loss(spec, reward_target(sample), spec.extract(x0_hat)))
        l_reward = ops.mean_of(terms)
        reward_stats = reward_tape.stats()
        g_reward = reward_tape.backward(l_reward) if lam != 0.0 else GradientMap()

    with Tape() as train_tape:
        terms = []
        for j, sample in enumerate(batch):
            e = Tensor.wrap(eps[j])
            c_v = Tensor.wrap(condition_input(sample, num_classes))
            c_t = caption_embedding(params, sample.caption_id)
            x_t = forward_diffuse(Tensor.wrap(sample.x0), t, e, s)
            terms.append(diffusion_loss(denoiser_forward(params, x_t, int(s.timesteps[t]), c_t, c_v), e))
        l_train = ops.mean_of(terms)
        train_stats = train_tape.stats()
        g_train = train_tape.backward(l_train)
    wall = time.perf_counter() - start

    lt, lr = l_train.item(), l_reward.item()
    l_total = lt + lam * lr
    check_finite(it, lt, lr, l_total)
    params = params.replace(opt.step(params.trainable(), _sum_grads(params, g_train, g_reward, lam)))
    peak = max(reward_stats, train_stats, key=lambda st: st.tape_nodes)
    stats = peak.model_copy(update={"strategy": Strategy.FULL_SAMPLING.value,
                                    "sampling_steps": t_sample, "wall_time": wall})
    return StepResult(params=params, l_train=lt, l_reward=lr, l_total=l_total, stats=stats, updated=True)


def reward_finetune_full_sampling(params: DenoiserParams, data: Dataset, spec: RewardSpec, cfg: TrainConfig,
                                  seed: int) -> TrainResult:
    check_sampling_budget(cfg.t_sample)
    if not len(data):
        raise ConfigError("training needs a non-empty dataset")
    s = schedule_for(cfg)
    opt = make_optimizer(cfg)
    lam = resolve_lambda(spec, cfg)
    result = TrainResult(params=freeze_base(params))
    for it in range(cfg.iters):
        draw = draw_step(seed, it, s.T, len(data), cfg.batch, data[0].x0.shape)
        batch = [data[int(i)] for i in draw.idx]
        step = full_sampling_step(result.params, opt, batch, draw.t, draw.eps, draw.chain_seeds, s,
                                  data.num_classes, spec, lam, cfg.t_sample, it=it)
        result.params = step.params
        result.samples_seen += len(batch)
        result.reports.append(StepReport(iter=it, t=draw.t, l_train=step.l_train,
                                         l_reward=step.l_reward, l_total=step.l_total))
        result.tape_stats.append(step.stats)
        if (it + 1) % cfg.log_every == 0 or it + 1 == cfg.iters:
            log.info("full-sampling k=%d iter=%d/%d l_train=%.5f l_reward=%.5f nodes=%d", cfg.t_sample,
                     it + 1, cfg.iters, step.l_train, step.l_reward, step.stats.tape_nodes)
    return result
