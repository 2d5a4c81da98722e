# cyclereward/services/rewards/segmenter.py
"""Tiny conv segmentation networks used as reward and evaluation models."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from cyclereward.core.errors import ConfigError, DatasetError, DivergenceError
from cyclereward.services.autograd import Adam, Tape, Tensor, ops
from cyclereward.services.denoiser.checkpoint import load_tensors, save_tensors
from cyclereward.services.diffusion.noise import keyed_generator
from cyclereward.services.rewards.losses import cross_entropy

log = logging.getLogger("segmenter")


@dataclass(frozen=True)
class Segmenter:
    tensors: dict[str, Tensor]

    @property
    def depth(self) -> int:
        return 2 if "l2.w" in self.tensors else 1

    @property
    def num_classes(self) -> int:
        last = "l2.w" if self.depth == 2 else "l1.w"
        return self.tensors[last].shape[0]

    def frozen(self) -> "Segmenter":
        return Segmenter({k: v.with_grad(False) if v.requires_grad else v for k, v in self.tensors.items()})

    def __call__(self, img: Tensor) -> Tensor:
        return segmenter_forward(self, img)


def init_segmenter(num_classes: int, depth: int = 2, hidden: int = 8, in_channels: int = 1,
                   seed: int = 0) -> Segmenter:
    if num_classes < 2:
        raise ConfigError(f"segmenter needs K >= 2, got {num_classes}")
    if depth not in (1, 2):
        raise ConfigError(f"segmenter depth must be 1 or 2, got {depth}")
    rng = keyed_generator(seed, depth)
    if depth == 1:
        tensors = {"l1.w": np.zeros((num_classes, in_channels, 3, 3)), "l1.b": np.zeros(num_classes)}
    else:
        std = math.sqrt(2.0 / (in_channels * 9))
        tensors = {
            "l1.w": rng.standard_normal((hidden, in_channels, 3, 3)) * std,
            "l1.b": np.zeros(hidden),
            "l2.w": np.zeros((num_classes, hidden, 3, 3)),
            "l2.b": np.zeros(num_classes),
        }
    return Segmenter({k: Tensor.parameter(v) for k, v in tensors.items()})


def segmenter_forward(seg: Segmenter, img: Tensor) -> Tensor:
    """K x H x W class logits."""
    t = seg.tensors
    h = ops.conv2d3x3(img, t["l1.w"], t["l1.b"])
    if seg.depth == 2:
        h = ops.conv2d3x3(ops.relu(h), t["l2.w"], t["l2.b"])
    return h


def predict_classes(seg: Segmenter, img: np.ndarray) -> np.ndarray:
    return np.argmax(segmenter_forward(seg, Tensor.wrap(np.asarray(img, dtype=np.float64))).data, axis=0)


def segmenter_accuracy(seg: Segmenter, images: Sequence[np.ndarray], masks: Sequence[np.ndarray]) -> float:
    hits = total = 0
    for img, mask in zip(images, masks):
        pred = predict_classes(seg, img)
        hits += int((pred == np.asarray(mask).reshape(pred.shape)).sum())
        total += pred.size
    if total == 0:
        raise DatasetError("segmenter accuracy needs at least one sample")
    return hits / total


def train_segmenter(images: Sequence[np.ndarray], masks: Sequence[np.ndarray], num_classes: int,
                    depth: int = 2, hidden: int = 8, iters: int = 300, batch: int = 8,
                    lr: float = 1e-2, seed: int = 0) -> Segmenter:
    """Per-pixel cross-entropy with Adam on (image, class map) pairs; returns the frozen model."""
    if len(images) != len(masks) or not images:
        raise DatasetError(f"need matching non-empty images/masks, got {len(images)} and {len(masks)}")
    in_channels = np.asarray(images[0]).shape[0]
    seg = init_segmenter(num_classes, depth, hidden, in_channels, seed)
    opt = Adam(lr=lr)
    for it in range(iters):
        rng = keyed_generator(seed, it + 1)
        idx = rng.integers(0, len(images), size=batch)
        with Tape() as tape:
            terms = [cross_entropy(segmenter_forward(seg, Tensor.wrap(np.asarray(images[i], dtype=np.float64))),
                                   masks[i], num_classes) for i in idx]
            loss = ops.mean_of(terms)
            grads = tape.backward(loss)
        if not math.isfinite(loss.item()):
            raise DivergenceError(f"segmenter training diverged at iteration {it}")
        seg = Segmenter({**seg.tensors, **opt.step(seg.tensors, {k: grads.of(v) for k, v in seg.tensors.items()})})
        if (it + 1) % 100 == 0:
            log.info("segmenter depth=%d iter=%d loss=%.4f", depth, it + 1, loss.item())
    return seg.frozen()


def save_segmenter(path: str | Path, seg: Segmenter) -> Path:
    return save_tensors(path, seg.tensors)


def load_segmenter(path: str | Path) -> Segmenter:
    tensors = load_tensors(path)
    if "l1.w" not in tensors:
        raise DatasetError(f"{path}: not a segmenter checkpoint")
    return Segmenter(tensors)


def extract_segmentation(img: Tensor, segmenter: Segmenter) -> Tensor:
    """Per-pixel class logits of a frozen segmentation reward model."""
    return segmenter_forward(segmenter, img)
