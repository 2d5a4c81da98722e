# cyclereward/schemas/config.py
"""
Run configuration. Every section forbids unknown keys and every field has a
default, so `{}` is a valid config and resolves to the desk-scale setup.
"""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cyclereward.schemas.common import CaptionMode, ConditionKind, Strategy


# caption ids are bitmasks over the three shape classes
CAPTION_VOCAB = 8


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class DataSection(StrictModel):
    n: int = Field(400, ge=1)
    height: int = Field(32, ge=16)
    width: int = Field(32, ge=16)
    kind: ConditionKind = ConditionKind.SEG_MASK
    num_classes: int = Field(4, ge=2)
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)

    @field_validator("fractions")
    @classmethod
    def _fractions(cls, v):
        if any(f < 0 for f in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must be non-negative and sum to 1, got {v}")
        return v


class DenoiserConfig(StrictModel):
    widths: tuple[int, int, int] = (16, 32, 16)
    temb_dim: int = Field(16, ge=2)
    caption_dim: int = Field(8, ge=1)
    vocab: int = Field(8, ge=1)
    image_channels: int = Field(1, ge=1)


class TrainConfig(StrictModel):
    T: int = Field(100, ge=1)
    beta_start: float = 1e-4
    beta_end: float = 0.02
    t_thre: int = Field(20, ge=1)
    lam: Optional[float] = Field(None, ge=0.0, alias="lambda")
    lr: float = Field(1e-3, gt=0.0)
    batch: int = Field(16, ge=1)
    iters: int = Field(2000, ge=0)
    strategy: Strategy = Strategy.EFFICIENT
    t_sample: int = Field(4, ge=1)
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(1e-8, gt=0.0)
    log_every: int = Field(100, ge=1)

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _ranges(self):
        if self.t_thre > self.T:
            raise ValueError(f"t_thre ({self.t_thre}) must not exceed T ({self.T})")
        if not 0.0 < self.beta_start <= self.beta_end < 1.0:
            raise ValueError("need 0 < beta_start <= beta_end < 1")
        return self


class RewardSection(StrictModel):
    lambdas: dict[ConditionKind, float] = Field(default_factory=lambda: {
        ConditionKind.SEG_MASK: 0.5,
        ConditionKind.DEPTH_MAP: 0.5,
        ConditionKind.SOFT_EDGE: 1.0,
        ConditionKind.BINARY_EDGE: 1.0,
        ConditionKind.LINEART: 10.0,
    })
    segmenter_depth: int = Field(2, ge=1, le=2)
    segmenter_hidden: int = Field(8, ge=1)
    extractor_iters: int = Field(300, ge=0)
    extractor_batch: int = Field(8, ge=1)
    extractor_lr: float = Field(1e-2, gt=0.0)
    edge_low: float = 0.1
    edge_high: float = 0.2

    @model_validator(mode="after")
    def _edges(self):
        if not 0.0 <= self.edge_low < self.edge_high <= 1.0:
            raise ValueError("need 0 <= edge_low < edge_high <= 1")
        if any(v < 0 for v in self.lambdas.values()):
            raise ValueError("reward weights must be >= 0")
        return self


class EvalSection(StrictModel):
    n: int = Field(32, ge=0)
    sample_steps: Optional[int] = Field(None, ge=1)
    caption_mode: CaptionMode = CaptionMode.MATCHING
    f1_tolerance: int = Field(0, ge=0, le=1)
    workers: int = Field(1, ge=1)
    segmenter_hidden: int = Field(16, ge=1)
    downstream: bool = False
    downstream_iters: int = Field(300, ge=0)
    x0_profile: bool = False
    x0_profile_samples: int = Field(100, ge=1)
    x0_profile_bins: int = Field(10, ge=2)


class BenchSection(StrictModel):
    t_samples: list[int] = Field(default_factory=lambda: list(range(1, 9)))
    schedules: list[int] = Field(default_factory=lambda: [100, 1000])
    batch: int = Field(1, ge=1)
    extrapolate_to: int = Field(50, ge=1)

    @field_validator("t_samples")
    @classmethod
    def _t_samples(cls, v):
        if not v or any(k < 1 for k in v):
            raise ValueError("t_samples must be a non-empty list of positive step counts")
        return v


class PathsSection(StrictModel):
    dataset: Optional[str] = None
    checkpoint: Optional[str] = None
    baseline_checkpoint: Optional[str] = None


def _pretrain_default() -> TrainConfig:
    return TrainConfig(strategy=Strategy.DIFFUSION_ONLY, iters=2000)


def _finetune_default() -> TrainConfig:
    return TrainConfig(strategy=Strategy.EFFICIENT, iters=500)


class RunConfig(StrictModel):
    seed: int = Field(0, ge=0)
    data: DataSection = Field(default_factory=DataSection)
    model: DenoiserConfig = Field(default_factory=DenoiserConfig)
    pretrain: TrainConfig = Field(default_factory=_pretrain_default)
    finetune: TrainConfig = Field(default_factory=_finetune_default)
    reward: RewardSection = Field(default_factory=RewardSection)
    eval: EvalSection = Field(default_factory=EvalSection)
    bench: BenchSection = Field(default_factory=BenchSection)
    paths: PathsSection = Field(default_factory=PathsSection)

    @model_validator(mode="after")
    def _consistent(self):
        if self.data.kind == ConditionKind.SEG_MASK and self.data.num_classes < 4:
            raise ValueError("seg_mask data needs num_classes >= 4 (background + 3 shape classes)")
        if self.model.image_channels != 1:
            raise ValueError("model.image_channels must be 1 for single-channel datasets, "
                             f"got {self.model.image_channels}")
        if self.model.vocab < CAPTION_VOCAB:
            raise ValueError(f"model.vocab must cover caption ids 0..{CAPTION_VOCAB - 1}, got {self.model.vocab}")
        if self.pretrain.T != self.finetune.T:
            raise ValueError("pretrain.T and finetune.T must match (one noise schedule per model)")
        return self
