# cyclereward/cli/commands/finetune.py
import logging
from pathlib import Path

from cyclereward.cli.deps import Artifacts, get_checkpoint, get_dataset, get_reward_spec, get_split
from cyclereward.schemas.common import Strategy
from cyclereward.schemas.config import RunConfig
from cyclereward.services.denoiser import save_checkpoint
from cyclereward.services.finetune import (
    diffusion_only,
    reward_finetune_efficient,
    reward_finetune_full_sampling,
    reward_only,
)
from cyclereward.utils.io import write_csv
from cyclereward.utils.seeding import derive_seed

NAME = "finetune"
HELP = "reward fine-tune the control branch (efficient | full-sampling | reward-only | diffusion-only)"

log = logging.getLogger("finetune")

STEP_HEADER = ["iter", "t", "l_train", "l_reward", "l_total"]
TAPE_HEADER = ["strategy", "sampling_steps", "tape_nodes", "saved_elements", "wall_time"]


def run(cfg: RunConfig, out: Path) -> None:
    art = Artifacts(out)
    ds = get_dataset(cfg, art)
    train = get_split(cfg, ds).train
    params = get_checkpoint(cfg.paths.checkpoint, art.pretrained)
    ft = cfg.finetune
    seed = derive_seed(cfg.seed, "finetune")

    if ft.strategy == Strategy.DIFFUSION_ONLY:
        result = diffusion_only(params, train, ft, seed)
    else:
        spec = get_reward_spec(cfg, train, art)
        runner = {
            Strategy.EFFICIENT: reward_finetune_efficient,
            Strategy.FULL_SAMPLING: reward_finetune_full_sampling,
            Strategy.REWARD_ONLY: reward_only,
        }[ft.strategy]
        result = runner(params, train, spec, ft, seed)

    save_checkpoint(art.finetuned, result.params)
    write_csv(art.csv("finetune_steps"), STEP_HEADER,
              ([r.iter, r.t, r.l_train, r.l_reward, r.l_total] for r in result.reports))
    if result.tape_stats:
        write_csv(art.csv("finetune_tape"), TAPE_HEADER,
                  ([s.strategy, s.sampling_steps, s.tape_nodes, s.saved_elements, s.wall_time]
                   for s in result.tape_stats))
    log.info("%s fine-tuning -> %s (%d samples consumed)", ft.strategy.value, art.finetuned, result.samples_seen)
