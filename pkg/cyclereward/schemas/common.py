# cyclereward/schemas/common.py
from enum import Enum


class ConditionKind(str, Enum):
    SEG_MASK = "seg_mask"
    DEPTH_MAP = "depth_map"
    SOFT_EDGE = "soft_edge"        # hed analogue
    LINEART = "lineart"            # second soft-edge analogue
    BINARY_EDGE = "binary_edge"    # canny analogue

    @property
    def tag(self) -> int:
        """Stable small integer used in the dataset file header."""
        return _KIND_TAGS[self]

    @classmethod
    def from_tag(cls, tag: int) -> "ConditionKind":
        for kind, value in _KIND_TAGS.items():
            if value == tag:
                return kind
        raise ValueError(f"unknown condition kind tag {tag}")


_KIND_TAGS = {
    ConditionKind.SEG_MASK: 0,
    ConditionKind.DEPTH_MAP: 1,
    ConditionKind.SOFT_EDGE: 2,
    ConditionKind.LINEART: 3,
    ConditionKind.BINARY_EDGE: 4,
}


class LossForm(str, Enum):
    MSE = "mse"
    CROSS_ENTROPY = "cross_entropy"


class Strategy(str, Enum):
    EFFICIENT = "efficient"
    FULL_SAMPLING = "full-sampling"
    REWARD_ONLY = "reward-only"
    DIFFUSION_ONLY = "diffusion-only"


class CaptionMode(str, Enum):
    MATCHING = "matching"
    EMPTY = "empty"
    CONFLICTING = "conflicting"


class Direction(str, Enum):
    HIGHER_BETTER = "higher-better"
    LOWER_BETTER = "lower-better"
