# cyclereward/schemas/reports.py
from pydantic import BaseModel, Field, model_validator
from typing import Optional

from cyclereward.schemas.common import ConditionKind, Direction


class TapeStats(BaseModel):
    strategy: str = ""
    sampling_steps: int = Field(0, ge=0)
    tape_nodes: int = Field(0, ge=0)
    saved_elements: int = Field(0, ge=0)
    wall_time: float = Field(0.0, ge=0.0)


class StepReport(BaseModel):
    iter: int
    t: int
    l_train: float
    l_reward: Optional[float] = None   # absent when the reward gate is closed
    l_total: float


class TapeFit(BaseModel):
    slope: float
    intercept: float
    r2: float
    extrapolate_to: int
    ratio: float   # fitted nodes(extrapolate_to) / fitted nodes(1)


class MetricReport(BaseModel):
    kind: ConditionKind
    metric: str
    value: float
    n_samples: int
    seed: int
    direction: Direction
    label: str = ""

    @model_validator(mode="after")
    def _range(self):
        if self.metric in ("miou", "f1") and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{self.metric} must lie in [0, 1], got {self.value}")
        if self.metric == "rmse" and self.value < 0.0:
            raise ValueError("rmse must be non-negative")
        return self


class DownstreamReport(BaseModel):
    source: str           # real | baseline | finetuned
    accuracy: float
    miou: float


class X0ProfileRow(BaseModel):
    bin: int
    t_low: int
    t_high: int
    mean_error: float
