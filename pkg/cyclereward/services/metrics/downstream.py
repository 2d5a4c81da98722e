# cyclereward/services/metrics/downstream.py
"""Train a fresh segmenter on some image source and score it on real held-out images."""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from cyclereward.core.errors import ConfigError
from cyclereward.schemas.reports import DownstreamReport
from cyclereward.services.metrics.kernels import miou
from cyclereward.services.rewards.segmenter import predict_classes, train_segmenter

log = logging.getLogger("eval")


def mean_class_accuracy(pred: np.ndarray, gt: np.ndarray, num_classes: int) -> float:
    """Per-class recall averaged over the classes present in gt."""
    recalls = [float((pred[gt == c] == c).mean()) for c in range(num_classes) if (gt == c).any()]
    return float(np.mean(recalls))


def train_downstream_segmenter(images: Sequence[np.ndarray], masks: Sequence[np.ndarray],
                               eval_images: Sequence[np.ndarray], eval_masks: Sequence[np.ndarray],
                               num_classes: int, source: str, iters: int = 300, batch: int = 8,
                               lr: float = 1e-2, hidden: int = 8, seed: int = 0) -> DownstreamReport:
    """
    Fresh 2-layer segmenter trained on (images, ground-truth masks) and
    evaluated on held-out real images. Accuracy is the mean class accuracy
    over all evaluation pixels, so an untrained model sits at 1/K.
    """
    if not eval_images:
        raise ConfigError("downstream evaluation needs held-out images")
    seg = train_segmenter(images, masks, num_classes, depth=2, hidden=hidden, iters=iters,
                          batch=batch, lr=lr, seed=seed)
    preds = np.stack([predict_classes(seg, img) for img in eval_images])
    gts = np.stack([np.asarray(m).reshape(preds.shape[1:]) for m in eval_masks])
    report = DownstreamReport(source=source, accuracy=mean_class_accuracy(preds, gts, num_classes),
                              miou=miou(preds, gts, num_classes))
    log.info("downstream[%s] acc=%.4f miou=%.4f", source, report.accuracy, report.miou)
    return report
