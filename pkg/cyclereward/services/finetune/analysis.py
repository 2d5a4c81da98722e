# cyclereward/services/finetune/analysis.py
"""Error of the single-step x0 estimate as a function of the timestep."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from cyclereward.core.errors import ConfigError
from cyclereward.schemas.reports import X0ProfileRow
from cyclereward.services.autograd import Tensor
from cyclereward.services.data.dataset import ConditionedSample, condition_input
from cyclereward.services.denoiser.model import caption_embedding, denoiser_forward
from cyclereward.services.denoiser.params import DenoiserParams
from cyclereward.services.diffusion.noise import keyed_generator
from cyclereward.services.diffusion.process import forward_diffuse, predict_x0_single_step
from cyclereward.services.diffusion.schedule import NoiseSchedule


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks; 0.0 when either side is constant."""
    rx, ry = rankdata(x, method="average"), rankdata(y, method="average")
    rx, ry = rx - rx.mean(), ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    return float(rx @ ry) / denom if denom > 0 else 0.0


def decile_edges(T: int, bins: int) -> list[tuple[int, int]]:
    cuts = np.round(np.linspace(0, T, bins + 1)).astype(int)
    return [(int(lo) + 1, int(hi)) for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo]


def x0_error_profile(params: DenoiserParams, samples: Sequence[ConditionedSample], s: NoiseSchedule,
                     num_classes: int, seed: int, bins: int = 10) -> tuple[list[X0ProfileRow], float]:
    """
    Mean ||x0' - x0||_2 per timestep bin. Each sample is noised once per bin
    at a timestep drawn uniformly inside the bin. Returns the rows and the
    Spearman correlation between bin index and mean error.
    """
    if not samples:
        raise ConfigError("x0 error profile needs at least one sample")
    edges = decile_edges(s.T, bins)
    rows = []
    for b, (lo, hi) in enumerate(edges):
        errors = []
        for i, sample in enumerate(samples):
            rng = keyed_generator(seed, b * len(samples) + i)
            t = int(rng.integers(lo, hi + 1))
            eps = Tensor.wrap(rng.standard_normal(sample.x0.shape))
            x0 = Tensor.wrap(sample.x0)
            x_t = forward_diffuse(x0, t, eps, s)
            eps_hat = denoiser_forward(params, x_t, t, caption_embedding(params, sample.caption_id),
                                       Tensor.wrap(condition_input(sample, num_classes)))
            diff = predict_x0_single_step(x_t, eps_hat, t, s).data - sample.x0
            errors.append(float(np.sqrt((diff * diff).sum())))
        rows.append(X0ProfileRow(bin=b, t_low=lo, t_high=hi, mean_error=math.fsum(errors) / len(errors)))
    rho = spearman([r.bin for r in rows], [r.mean_error for r in rows])
    return rows, rho
