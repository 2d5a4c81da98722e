# cyclereward/services/finetune/bench.py
"""Tape cost of one representative step per strategy."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cyclereward.core.errors import ConfigError
from cyclereward.schemas.common import Strategy
from cyclereward.schemas.config import BenchSection, TrainConfig
from cyclereward.schemas.reports import TapeFit, TapeStats
from cyclereward.services.data.dataset import Dataset
from cyclereward.services.denoiser.model import freeze_base
from cyclereward.services.denoiser.params import DenoiserParams
from cyclereward.services.diffusion.schedule import make_schedule
from cyclereward.services.finetune.full_sampling import full_sampling_step
from cyclereward.services.finetune.trainer import draw_step, make_optimizer, resolve_lambda, train_step
from cyclereward.services.rewards.spec import RewardSpec

log = logging.getLogger("bench")


@dataclass
class BenchResult:
    rows: list[TapeStats]
    fit: TapeFit


def fit_line(xs: Sequence[float], ys: Sequence[float], extrapolate_to: int = 50) -> TapeFit:
    """Least-squares line through (xs, ys) with R^2 and the fitted y(extrapolate_to) / y(1) ratio."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or len(np.unique(x)) < 2:
        raise ConfigError("fit_line needs at least two distinct x values and matching lengths")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    at_one = intercept + slope
    ratio = (intercept + slope * extrapolate_to) / at_one if at_one != 0 else float("inf")
    return TapeFit(slope=float(slope), intercept=float(intercept), r2=r2,
                   extrapolate_to=extrapolate_to, ratio=float(ratio))


def bench_tape(params: DenoiserParams, data: Dataset, spec: RewardSpec, bench: BenchSection,
               cfg: TrainConfig, seed: int) -> BenchResult:
    """
    Efficient step (reward gate forced open at t = 1) on every schedule in
    `bench.schedules`, then full-sampling steps for every T_sample on the
    first schedule. Parameters are not carried between measurements.
    """
    if len(data) < bench.batch:
        raise ConfigError(f"bench needs {bench.batch} samples, dataset has {len(data)}")
    params = freeze_base(params)
    batch = [data[i] for i in range(bench.batch)]
    lam = resolve_lambda(spec, cfg)
    draw = draw_step(seed, 0, 1, len(data), bench.batch, data[0].x0.shape)
    rows: list[TapeStats] = []

    for T in bench.schedules:
        s = make_schedule(T, cfg.beta_start, cfg.beta_end)
        step = train_step(params, make_optimizer(cfg), batch, 1, draw.eps, s, data.num_classes,
                          Strategy.EFFICIENT, spec=spec, lam=lam, t_thre=T)
        rows.append(step.stats.model_copy(update={"strategy": f"{Strategy.EFFICIENT.value}(T={T})"}))
        log.info("efficient T=%d nodes=%d saved=%d", T, step.stats.tape_nodes, step.stats.saved_elements)

    s = make_schedule(bench.schedules[0], cfg.beta_start, cfg.beta_end)
    ks, nodes = [], []
    for k in bench.t_samples:
        step = full_sampling_step(params, make_optimizer(cfg), batch, 1, draw.eps, draw.chain_seeds, s,
                                  data.num_classes, spec, lam, k)
        rows.append(step.stats)
        ks.append(k)
        nodes.append(step.stats.tape_nodes)
        log.info("full-sampling k=%d nodes=%d saved=%d", k, step.stats.tape_nodes, step.stats.saved_elements)

    fit = fit_line(ks, nodes, bench.extrapolate_to)
    log.info("tape fit: slope=%.3f intercept=%.3f r2=%.5f ratio(%d)=%.2f",
             fit.slope, fit.intercept, fit.r2, fit.extrapolate_to, fit.ratio)
    return BenchResult(rows=rows, fit=fit)
