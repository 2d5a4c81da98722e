# cyclereward/services/finetune/trainer.py
"""
Training loops over the shared single step.

Every iteration draws (t, batch indices, eps, chain seeds) from a generator
keyed by (seed, iteration), so two strategies run with one seed see the same
batches and the same noise.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from cyclereward.core.errors import ConfigError, DivergenceError
from cyclereward.schemas.common import Strategy
from cyclereward.schemas.config import TrainConfig
from cyclereward.schemas.reports import StepReport, TapeStats
from cyclereward.services.autograd import Adam, GradientMap, Tape, Tensor, ops
from cyclereward.services.data.dataset import ConditionedSample, Dataset, condition_input
from cyclereward.services.denoiser.model import caption_embedding, denoiser_forward, freeze_base, unfreeze
from cyclereward.services.denoiser.params import DenoiserParams
from cyclereward.services.diffusion.noise import keyed_generator, keyed_normal
from cyclereward.services.diffusion.process import forward_diffuse, predict_x0_single_step
from cyclereward.services.diffusion.schedule import NoiseSchedule, make_schedule
from cyclereward.services.finetune.losses import diffusion_loss, total_loss
from cyclereward.services.rewards.losses import consistency_loss
from cyclereward.services.rewards.spec import RewardSpec


@dataclass(frozen=True)
class StepDraw:
    t: int
    idx: np.ndarray
    eps: np.ndarray          # batch x C x H x W
    chain_seeds: np.ndarray  # one sampling-chain seed per batch element


@dataclass
class StepResult:
    params: DenoiserParams
    l_train: float
    l_reward: Optional[float]
    l_total: float
    stats: TapeStats
    updated: bool


@dataclass
class TrainResult:
    params: DenoiserParams
    reports: list[StepReport] = field(default_factory=list)
    tape_stats: list[TapeStats] = field(default_factory=list)
    samples_seen: int = 0

    @property
    def losses(self) -> list[float]:
        return [r.l_train for r in self.reports]


def draw_step(seed: int, it: int, T: int, n: int, batch: int, image_shape: Sequence[int]) -> StepDraw:
    rng = keyed_generator(seed, it)
    t = int(rng.integers(1, T + 1))
    idx = rng.integers(0, n, size=batch)
    eps = rng.standard_normal((batch,) + tuple(image_shape))
    chain_seeds = rng.integers(0, 1 << 62, size=batch)
    return StepDraw(t=t, idx=idx, eps=eps, chain_seeds=chain_seeds)


def schedule_for(cfg: TrainConfig) -> NoiseSchedule:
    return make_schedule(cfg.T, cfg.beta_start, cfg.beta_end)


def reward_target(sample: ConditionedSample) -> Tensor:
    return Tensor.wrap(np.asarray(sample.c_v, dtype=np.float64))


def apply_gradients(params: DenoiserParams, opt: Adam, grads: GradientMap) -> DenoiserParams:
    trainable = params.trainable()
    return params.replace(opt.step(trainable, {name: grads.of(p) for name, p in trainable.items()}))


def check_finite(it: int, *values: Optional[float]) -> None:
    for v in values:
        if v is not None and not math.isfinite(v):
            raise DivergenceError(f"non-finite loss at iteration {it}")


def train_step(params: DenoiserParams, opt: Adam, batch: Sequence[ConditionedSample], t: int,
               eps: np.ndarray, s: NoiseSchedule, num_classes: int, strategy: Strategy,
               spec: Optional[RewardSpec] = None, lam: float = 0.0, t_thre: Optional[int] = None,
               it: int = 0) -> StepResult:
    """
    One update on a single tape: noise the batch at t, score the noise
    prediction and, when the reward gate is open (t <= t_thre), restore x0 in
    one step and score it with the frozen reward model.
    """
    t = s.check_t(t)
    t_thre = s.T if t_thre is None else t_thre
    reward_only = strategy == Strategy.REWARD_ONLY
    active = spec is not None and strategy in (Strategy.EFFICIENT, Strategy.REWARD_ONLY) and t <= t_thre

    start = time.perf_counter()
    with Tape() as tape:
        train_terms, reward_terms = [], []
        for j, sample in enumerate(batch):
            e = Tensor.wrap(eps[j])
            c_v = Tensor.wrap(condition_input(sample, num_classes))
            c_t = caption_embedding(params, sample.caption_id)
            x_t = forward_diffuse(Tensor.wrap(sample.x0), t, e, s)
            eps_hat = denoiser_forward(params, x_t, int(s.timesteps[t]), c_t, c_v)
            train_terms.append(diffusion_loss(eps_hat, e))
            if active:
                x0_hat = predict_x0_single_step(x_t, eps_hat, t, s)
                reward_terms.append(consistency_loss(spec, reward_target(sample), spec.extract(x0_hat)))
        l_train = ops.mean_of(train_terms)
        l_reward = ops.mean_of(reward_terms) if active else None
        loss = total_loss(l_train, l_reward, lam, active, reward_only=reward_only)
        stats = tape.stats()
        grads = tape.backward(loss) if loss is not None else None
    wall = time.perf_counter() - start

    lt = l_train.item()
    lr = l_reward.item() if l_reward is not None else None
    l_total = loss.item() if loss is not None else 0.0
    check_finite(it, lt, lr, l_total)
    if grads is not None:
        params = apply_gradients(params, opt, grads)
    return StepResult(
        params=params, l_train=lt, l_reward=lr, l_total=l_total,
        stats=stats.model_copy(update={"strategy": strategy.value, "sampling_steps": 1, "wall_time": wall}),
        updated=grads is not None,
    )


def make_optimizer(cfg: TrainConfig) -> Adam:
    return Adam(lr=cfg.lr, betas=tuple(cfg.adam_betas), eps=cfg.adam_eps)


def _loop(params: DenoiserParams, data: Dataset, cfg: TrainConfig, seed: int, strategy: Strategy,
          spec: Optional[RewardSpec], lam: float, logger_name: str) -> TrainResult:
    if not len(data):
        raise ConfigError("training needs a non-empty dataset")
    s = schedule_for(cfg)
    opt = make_optimizer(cfg)
    result = TrainResult(params=params)
    lg = logging.getLogger(logger_name)
    for it in range(cfg.iters):
        draw = draw_step(seed, it, s.T, len(data), cfg.batch, data[0].x0.shape)
        batch = [data[int(i)] for i in draw.idx]
        step = train_step(result.params, opt, batch, draw.t, draw.eps, s, data.num_classes, strategy,
                          spec=spec, lam=lam, t_thre=cfg.t_thre, it=it)
        result.params = step.params
        result.samples_seen += len(batch)
        result.reports.append(StepReport(iter=it, t=draw.t, l_train=step.l_train,
                                         l_reward=step.l_reward, l_total=step.l_total))
        if (it + 1) % cfg.log_every == 0 or it + 1 == cfg.iters:
            lg.info("%s iter=%d/%d t=%d l_train=%.5f l_total=%.5f", strategy.value, it + 1, cfg.iters,
                    draw.t, step.l_train, step.l_total)
    return result


def pretrain(params: DenoiserParams, data: Dataset, cfg: TrainConfig, seed: int) -> TrainResult:
    """Diffusion-loss training of every parameter, trunk and control branch alike."""
    return _loop(unfreeze(params), data, cfg, seed, Strategy.DIFFUSION_ONLY, None, 0.0, "pretrain")


def resolve_lambda(spec: Optional[RewardSpec], cfg: TrainConfig) -> float:
    if cfg.lam is not None:
        return float(cfg.lam)
    return spec.lam if spec is not None else 0.0


def reward_finetune_efficient(params: DenoiserParams, data: Dataset, spec: RewardSpec, cfg: TrainConfig,
                              seed: int) -> TrainResult:
    if cfg.t_thre > cfg.T:
        raise ConfigError(f"t_thre ({cfg.t_thre}) exceeds T ({cfg.T})")
    lam = resolve_lambda(spec, cfg)
    return _loop(freeze_base(params), data, cfg, seed, Strategy.EFFICIENT, spec, lam, "finetune")


def reward_only(params: DenoiserParams, data: Dataset, spec: RewardSpec, cfg: TrainConfig,
                seed: int) -> TrainResult:
    lam = resolve_lambda(spec, cfg)
    return _loop(freeze_base(params), data, cfg, seed, Strategy.REWARD_ONLY, spec, lam, "finetune")


def diffusion_only(params: DenoiserParams, data: Dataset, cfg: TrainConfig, seed: int) -> TrainResult:
    """Control-branch fine-tuning with the diffusion loss alone (the no-reward reference)."""
    return _loop(freeze_base(params), data, cfg, seed, Strategy.DIFFUSION_ONLY, None, 0.0, "finetune")


VALIDATION_GRID = 10


def validation_loss(params: DenoiserParams, samples: Sequence[ConditionedSample], s: NoiseSchedule,
                    num_classes: int, seed: int, grid: int = VALIDATION_GRID) -> float:
    """Mean noise-prediction loss over the samples at `grid` evenly spaced timesteps."""
    if not samples:
        raise ConfigError("validation needs at least one sample")
    ts = np.unique(np.round(np.linspace(1, s.T, min(grid, s.T))).astype(int))
    losses = []
    for i, sample in enumerate(samples):
        c_v = Tensor.wrap(condition_input(sample, num_classes))
        c_t = caption_embedding(params, sample.caption_id)
        x0 = Tensor.wrap(sample.x0)
        for t in ts:
            e = Tensor.wrap(keyed_normal(seed, i * (s.T + 1) + int(t), sample.x0.shape))
            x_t = forward_diffuse(x0, int(t), e, s)
            losses.append(diffusion_loss(denoiser_forward(params, x_t, int(t), c_t, c_v), e).item())
    return math.fsum(losses) / len(losses)
