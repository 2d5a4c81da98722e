# cyclereward/services/data/dataset.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from cyclereward.core.errors import ConfigError, DatasetError
from cyclereward.schemas.common import ConditionKind
from cyclereward.services.autograd import Tensor
from cyclereward.services.data.scenes import CLASS_OF, Raster, SceneSpec, random_scene, rasterize
from cyclereward.services.diffusion.noise import keyed_generator
from cyclereward.services.rewards.extractors import (
    extract_binary_edge_soft,
    extract_lineart,
    extract_soft_edge,
)
from cyclereward.services.rewards.losses import one_hot

log = logging.getLogger("data")

SPLIT_STREAM = 0x5917
SHAPE_CLASSES = len(CLASS_OF)


@dataclass(frozen=True)
class ConditionedSample:
    x0: np.ndarray          # 1 x H x W in [-1, 1]
    c_v: np.ndarray         # H x W uint8 class map (seg_mask) or 1 x H x W float map
    caption_id: int
    kind: ConditionKind


@dataclass
class Dataset:
    samples: list[ConditionedSample]
    height: int
    width: int
    kind: ConditionKind
    num_classes: int
    indices: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.indices:
            self.indices = list(range(len(self.samples)))

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i: int) -> ConditionedSample:
        return self.samples[i]

    def __iter__(self) -> Iterator[ConditionedSample]:
        return iter(self.samples)

    def subset(self, positions: Sequence[int]) -> "Dataset":
        return Dataset(
            samples=[self.samples[p] for p in positions],
            height=self.height, width=self.width, kind=self.kind, num_classes=self.num_classes,
            indices=[self.indices[p] for p in positions],
        )


class Split(NamedTuple):
    train: Dataset
    val: Dataset
    test: Dataset


def ground_truth_condition(raster: Raster, kind: ConditionKind) -> np.ndarray:
    """
    Exact condition for a rasterised scene. Edge kinds apply their fixed
    analytic filter to the noiseless raster; binary edges are stored hard.
    """
    if kind == ConditionKind.SEG_MASK:
        return raster.classes.copy()
    if kind == ConditionKind.DEPTH_MAP:
        return raster.depth[None].copy()
    img = Tensor.wrap(raster.image[None].copy())
    if kind == ConditionKind.SOFT_EDGE:
        return extract_soft_edge(img).numpy()
    if kind == ConditionKind.LINEART:
        return extract_lineart(img).numpy()
    return (extract_binary_edge_soft(img).data >= 0.5).astype(np.float64)


def render_sample(scene: SceneSpec, kind: ConditionKind) -> ConditionedSample:
    raster = rasterize(scene)
    return ConditionedSample(
        x0=raster.image[None].copy(),
        c_v=ground_truth_condition(raster, kind),
        caption_id=scene.caption_id,
        kind=kind,
    )


def condition_input(sample: ConditionedSample, num_classes: int) -> np.ndarray:
    """What the denoiser's control branch sees: one-hot classes or the map itself."""
    if sample.kind == ConditionKind.SEG_MASK:
        return one_hot(sample.c_v, num_classes)
    return sample.c_v


def generate_dataset(n: int, height: int, width: int, kind: ConditionKind, num_classes: int,
                     seed: int) -> Dataset:
    if n < 1:
        raise ConfigError(f"dataset size must be >= 1, got {n}")
    if height < 16 or width < 16:
        raise ConfigError(f"canvas must be at least 16x16, got {height}x{width}")
    if num_classes < SHAPE_CLASSES + 1:
        raise DatasetError(
            f"K={num_classes} cannot hold background plus {SHAPE_CLASSES} shape classes")
    samples = [render_sample(random_scene(keyed_generator(seed, i), height, width), kind) for i in range(n)]
    log.info("generated %d %s samples at %dx%d (seed=%d)", n, kind.value, height, width, seed)
    return Dataset(samples=samples, height=height, width=width, kind=kind, num_classes=num_classes)


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder rounding: every size is within 1 of n * fraction."""
    exact = [n * f for f in fractions]
    sizes = [int(np.floor(e)) for e in exact]
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split(ds: Dataset, fractions: Sequence[float], seed: int) -> Split:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be three non-negative values summing to 1, got {fractions}")
    perm = keyed_generator(seed, SPLIT_STREAM).permutation(len(ds))
    sizes = split_sizes(len(ds), fractions)
    cut1, cut2 = sizes[0], sizes[0] + sizes[1]
    parts = [sorted(perm[:cut1].tolist()), sorted(perm[cut1:cut2].tolist()), sorted(perm[cut2:].tolist())]
    return Split(*(ds.subset(p) for p in parts))
