# cyclereward/cli/commands/sample.py
import logging
from pathlib import Path

import numpy as np

from cyclereward.cli.deps import Artifacts, get_checkpoint, get_dataset, get_eval_extractor, get_split
from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import RunConfig
from cyclereward.services.diffusion import make_schedule
from cyclereward.services.metrics import evaluate_controllability, model_generator
from cyclereward.utils.io import to_gray8, write_pgm
from cyclereward.utils.seeding import derive_seed

NAME = "sample"
HELP = "write generated image | input condition | re-extracted condition as PGM triptychs"

log = logging.getLogger("sample")


def condition_gray(c: np.ndarray, kind: ConditionKind, num_classes: int) -> np.ndarray:
    c = np.asarray(c)
    c = c[0] if c.ndim == 3 else c
    if kind == ConditionKind.SEG_MASK:
        return to_gray8(c, 0.0, num_classes - 1.0)
    return to_gray8(c, 0.0, 1.0)


def run(cfg: RunConfig, out: Path) -> None:
    art = Artifacts(out)
    ds = get_dataset(cfg, art)
    parts = get_split(cfg, ds)
    params = get_checkpoint(cfg.paths.checkpoint, art.finetuned)
    extractor = get_eval_extractor(cfg, parts.train, art)
    test = parts.test if len(parts.test) else parts.train
    n = min(cfg.eval.n, len(test))
    seed = derive_seed(cfg.seed, "eval")
    s = make_schedule(cfg.finetune.T, cfg.finetune.beta_start, cfg.finetune.beta_end)
    gen = model_generator(params, s, ds.num_classes, seed, cfg.eval.caption_mode, cfg.eval.sample_steps)
    res = evaluate_controllability(gen, test.samples, extractor, n, seed, ds.num_classes,
                                   cfg.eval.f1_tolerance, cfg.eval.workers, label="sample")
    for i in range(n):
        tile = np.concatenate([
            to_gray8(res.images[i][0], -1.0, 1.0),
            condition_gray(test[i].c_v, ds.kind, ds.num_classes),
            condition_gray(res.extracted[i], ds.kind, ds.num_classes),
        ], axis=1)
        write_pgm(art.samples_dir / f"sample_{i:03d}.pgm", tile)
    log.info("wrote %d samples to %s", n, art.samples_dir)
