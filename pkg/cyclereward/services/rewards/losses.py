# cyclereward/services/rewards/losses.py
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from cyclereward.core.errors import DatasetError, ShapeMismatchError
from cyclereward.schemas.common import LossForm
from cyclereward.services.autograd import Tensor, ops

if TYPE_CHECKING:
    from cyclereward.services.rewards.spec import RewardSpec


def one_hot(class_map: np.ndarray, num_classes: int) -> np.ndarray:
    """K x H x W float one-hot of an H x W (or 1 x H x W) integer class map."""
    cm = np.asarray(class_map)
    if cm.ndim == 3 and cm.shape[0] == 1:
        cm = cm[0]
    cm = cm.astype(np.int64)
    if cm.size and (cm.min() < 0 or cm.max() >= num_classes):
        raise DatasetError(f"class index outside [0, {num_classes}) in condition map")
    return (np.arange(num_classes)[:, None, None] == cm[None]).astype(np.float64)


def mse(target: Tensor, pred: Tensor) -> Tensor:
    if target.shape != pred.shape:
        raise ShapeMismatchError("mse", target.shape, pred.shape)
    d = ops.sub(pred, target)
    return ops.mean(ops.mul(d, d))


def cross_entropy(logits: Tensor, class_map, num_classes: int) -> Tensor:
    """Mean over pixels of -log softmax(logits)[true class]."""
    cm = class_map.data if isinstance(class_map, Tensor) else class_map
    target = one_hot(cm, num_classes)
    if logits.shape != target.shape:
        raise ShapeMismatchError("cross_entropy", logits.shape, target.shape)
    n = target.shape[1] * target.shape[2]
    picked = ops.reduce_sum(ops.mul(ops.log_softmax(logits, axis=0), Tensor.wrap(target)))
    return ops.mul(picked, -1.0 / n)


def consistency_loss(spec: "RewardSpec", c_v: Tensor, c_v_hat: Tensor) -> Tensor:
    if spec.loss_form == LossForm.CROSS_ENTROPY:
        return cross_entropy(c_v_hat, c_v, spec.num_classes)
    return mse(c_v, c_v_hat)
