# cyclereward/cli/commands/pretrain.py
import logging
from pathlib import Path

from cyclereward.cli.deps import Artifacts, get_dataset, get_split
from cyclereward.schemas.config import RunConfig
from cyclereward.services.denoiser import condition_channels, init_params, save_checkpoint
from cyclereward.services.finetune import pretrain
from cyclereward.utils.io import write_csv
from cyclereward.utils.seeding import derive_seed

NAME = "pretrain"
HELP = "train the conditional denoiser with the diffusion loss"

log = logging.getLogger("pretrain")


def run(cfg: RunConfig, out: Path) -> None:
    art = Artifacts(out)
    ds = get_dataset(cfg, art)
    train = get_split(cfg, ds).train
    params = init_params(cfg.model, condition_channels(ds.kind, ds.num_classes), derive_seed(cfg.seed, "init"))
    save_checkpoint(art.init_checkpoint, params)

    result = pretrain(params, train, cfg.pretrain, derive_seed(cfg.seed, "pretrain"))
    save_checkpoint(art.pretrained, result.params)
    write_csv(art.csv("pretrain_loss"), ["iter", "t", "l_train"],
              ([r.iter, r.t, r.l_train] for r in result.reports))
    log.info("pretrained checkpoint -> %s (%d iterations, %d samples)", art.pretrained, cfg.pretrain.iters,
             result.samples_seen)
