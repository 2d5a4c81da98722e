# cyclereward/services/rewards/spec.py
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

from cyclereward.core.errors import ConfigError
from cyclereward.schemas.common import ConditionKind, LossForm
from cyclereward.services.autograd import Tensor
from cyclereward.services.rewards.extractors import (
    EDGE_HIGH,
    EDGE_LOW,
    extract_binary_edge_soft,
    extract_depth,
    extract_lineart,
    extract_soft_edge,
)
from cyclereward.services.rewards.segmenter import Segmenter

DEFAULT_LAMBDA: dict[ConditionKind, float] = {
    ConditionKind.SEG_MASK: 0.5,
    ConditionKind.DEPTH_MAP: 0.5,
    ConditionKind.SOFT_EDGE: 1.0,
    ConditionKind.BINARY_EDGE: 1.0,
    ConditionKind.LINEART: 10.0,
}


def loss_form_for(kind: ConditionKind) -> LossForm:
    return LossForm.CROSS_ENTROPY if kind == ConditionKind.SEG_MASK else LossForm.MSE


@dataclass(frozen=True)
class RewardSpec:
    """Frozen reward model D for one condition kind, its loss form and weight."""
    kind: ConditionKind
    loss_form: LossForm
    lam: float
    extractor: Callable[[Tensor], Tensor]
    num_classes: int = 0
    segmenter: Optional[Segmenter] = None

    def __post_init__(self):
        if self.loss_form != loss_form_for(self.kind):
            raise ConfigError(f"{self.kind.value} requires the {loss_form_for(self.kind).value} loss")
        if self.lam < 0:
            raise ConfigError(f"reward weight must be >= 0, got {self.lam}")
        if self.kind == ConditionKind.SEG_MASK and self.num_classes < 2:
            raise ConfigError("seg_mask reward needs K >= 2")

    def extract(self, img: Tensor) -> Tensor:
        return self.extractor(img)


def build_reward_spec(kind: ConditionKind, lam: Optional[float] = None, segmenter: Optional[Segmenter] = None,
                      edge_low: float = EDGE_LOW, edge_high: float = EDGE_HIGH) -> RewardSpec:
    lam = DEFAULT_LAMBDA[kind] if lam is None else float(lam)
    if kind == ConditionKind.SEG_MASK:
        if segmenter is None:
            raise ConfigError("seg_mask reward needs a trained segmenter")
        seg = segmenter.frozen()
        return RewardSpec(kind, LossForm.CROSS_ENTROPY, lam, seg, num_classes=seg.num_classes, segmenter=seg)
    extractors = {
        ConditionKind.DEPTH_MAP: extract_depth,
        ConditionKind.SOFT_EDGE: extract_soft_edge,
        ConditionKind.LINEART: extract_lineart,
        ConditionKind.BINARY_EDGE: partial(extract_binary_edge_soft, low=edge_low, high=edge_high),
    }
    if kind == ConditionKind.BINARY_EDGE and not 0.0 <= edge_low < edge_high <= 1.0:
        raise ConfigError(f"edge thresholds need 0 <= low < high <= 1, got ({edge_low}, {edge_high})")
    return RewardSpec(kind, LossForm.MSE, lam, extractors[kind])
