# cyclereward/services/metrics/controllability.py
"""
Controllability: generate from each held-out condition, re-extract the
condition from the generated image with the evaluation extractors and
score it against the input condition.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from cyclereward.core.errors import ConfigError
from cyclereward.schemas.common import CaptionMode, ConditionKind, Direction
from cyclereward.schemas.reports import MetricReport
from cyclereward.services.autograd import Tensor
from cyclereward.services.data.dataset import ConditionedSample, condition_input
from cyclereward.services.denoiser.model import ControlledDenoiser, caption_embedding
from cyclereward.services.denoiser.params import DenoiserParams
from cyclereward.services.diffusion.sampler import sample_full
from cyclereward.services.diffusion.schedule import NoiseSchedule, respace
from cyclereward.services.metrics.kernels import f1_edge, miou, rmse, ssim
from cyclereward.services.rewards.extractors import (
    EDGE_HIGH,
    EDGE_LOW,
    extract_binary_edge_soft,
    extract_depth,
    extract_lineart,
    extract_soft_edge,
)
from cyclereward.services.rewards.segmenter import Segmenter, predict_classes
from cyclereward.utils.seeding import derive_seed

log = logging.getLogger("eval")

METRIC_FOR_KIND: dict[ConditionKind, tuple[str, Direction]] = {
    ConditionKind.SEG_MASK: ("miou", Direction.HIGHER_BETTER),
    ConditionKind.BINARY_EDGE: ("f1", Direction.HIGHER_BETTER),
    ConditionKind.SOFT_EDGE: ("ssim", Direction.HIGHER_BETTER),
    ConditionKind.LINEART: ("ssim", Direction.HIGHER_BETTER),
    ConditionKind.DEPTH_MAP: ("rmse", Direction.LOWER_BETTER),
}

# (index, sample) -> generated 1 x H x W image
Generator = Callable[[int, ConditionedSample], np.ndarray]


@dataclass(frozen=True)
class EvalExtractor:
    """Hard condition extraction for scoring; segmentation uses its own segmenter."""
    kind: ConditionKind
    segmenter: Optional[Segmenter] = None
    edge_low: float = EDGE_LOW
    edge_high: float = EDGE_HIGH

    def __post_init__(self):
        if self.kind == ConditionKind.SEG_MASK and self.segmenter is None:
            raise ConfigError("seg_mask evaluation needs an evaluation segmenter")

    def __call__(self, img: np.ndarray) -> np.ndarray:
        if self.kind == ConditionKind.SEG_MASK:
            return predict_classes(self.segmenter, img)
        x = Tensor.wrap(np.asarray(img, dtype=np.float64))
        if self.kind == ConditionKind.BINARY_EDGE:
            return (extract_binary_edge_soft(x, self.edge_low, self.edge_high).data[0] >= 0.5).astype(np.float64)
        if self.kind == ConditionKind.SOFT_EDGE:
            return extract_soft_edge(x).data[0].copy()
        if self.kind == ConditionKind.LINEART:
            return extract_lineart(x).data[0].copy()
        return extract_depth(x).data[0].copy()


@dataclass
class EvalResult:
    report: MetricReport
    scores: list[float]
    images: list[np.ndarray]
    extracted: list[np.ndarray]


def score(kind: ConditionKind, extracted: np.ndarray, target: np.ndarray, num_classes: int,
          f1_tolerance: int = 0) -> float:
    if kind == ConditionKind.SEG_MASK:
        return miou(extracted, target, num_classes)
    if kind == ConditionKind.BINARY_EDGE:
        return f1_edge(extracted, target, tolerance=f1_tolerance)
    if kind in (ConditionKind.SOFT_EDGE, ConditionKind.LINEART):
        return ssim(extracted, target)
    return rmse(extracted, target)


def caption_for(mode: CaptionMode, caption_id: int) -> Optional[int]:
    """Prompt ablation: the true caption, the empty prompt or a conflicting one."""
    if mode == CaptionMode.MATCHING:
        return caption_id
    if mode == CaptionMode.EMPTY:
        return None
    flipped = caption_id ^ 7
    return flipped if flipped != 0 else 7


def model_generator(params: DenoiserParams, s: NoiseSchedule, num_classes: int, seed: int,
                    caption_mode: CaptionMode = CaptionMode.MATCHING,
                    sample_steps: Optional[int] = None) -> Generator:
    chain = respace(s, sample_steps) if sample_steps is not None else s
    model = ControlledDenoiser(params)

    def generate(i: int, sample: ConditionedSample) -> np.ndarray:
        c_v = Tensor.wrap(condition_input(sample, num_classes))
        c_t = caption_embedding(params, caption_for(caption_mode, sample.caption_id))
        x = sample_full(model, c_v, c_t, chain, derive_seed(seed, f"eval-sample-{i}"), shape=sample.x0.shape)
        return np.clip(x.data, -1.0, 1.0)

    return generate


def evaluate_controllability(generator: Generator, samples: Sequence[ConditionedSample], extractor: EvalExtractor,
                             n: int, seed: int, num_classes: int, f1_tolerance: int = 0, workers: int = 1,
                             label: str = "") -> EvalResult:
    if n < 1:
        raise ConfigError("evaluation needs n >= 1")
    if n > len(samples):
        raise ConfigError(f"n={n} exceeds the {len(samples)} available samples")
    kind = extractor.kind

    def one(i: int) -> tuple[float, np.ndarray, np.ndarray]:
        img = generator(i, samples[i])
        extracted = extractor(img)
        return score(kind, extracted, samples[i].c_v, num_classes, f1_tolerance), img, extracted

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(i) for i in range(n)]

    scores = [r[0] for r in results]
    metric, direction = METRIC_FOR_KIND[kind]
    value = math.fsum(scores) / n
    report = MetricReport(kind=kind, metric=metric, value=value, n_samples=n, seed=seed,
                          direction=direction, label=label)
    log.info("%s %s=%.4f over %d samples%s", kind.value, metric, value, n, f" [{label}]" if label else "")
    return EvalResult(report=report, scores=scores, images=[r[1] for r in results],
                      extracted=[r[2] for r in results])
