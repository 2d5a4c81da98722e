from cyclereward.services.finetune.analysis import spearman, x0_error_profile
from cyclereward.services.finetune.bench import BenchResult, bench_tape, fit_line
from cyclereward.services.finetune.full_sampling import (
    MAX_SAMPLING_STEPS,
    full_sampling_step,
    reward_finetune_full_sampling,
)
from cyclereward.services.finetune.losses import diffusion_loss, total_loss
from cyclereward.services.finetune.trainer import (
    StepDraw,
    StepResult,
    TrainResult,
    diffusion_only,
    draw_step,
    pretrain,
    reward_finetune_efficient,
    reward_only,
    train_step,
    validation_loss,
)

__all__ = [
    "BenchResult", "MAX_SAMPLING_STEPS", "StepDraw", "StepResult", "TrainResult", "bench_tape",
    "diffusion_loss", "diffusion_only", "draw_step", "fit_line", "full_sampling_step", "pretrain",
    "reward_finetune_efficient", "reward_finetune_full_sampling", "reward_only", "spearman",
    "total_loss", "train_step", "validation_loss", "x0_error_profile",
]
