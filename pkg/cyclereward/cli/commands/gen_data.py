# cyclereward/cli/commands/gen_data.py
import logging
from pathlib import Path

from cyclereward.cli.deps import Artifacts, get_split
from cyclereward.schemas.config import RunConfig
from cyclereward.services.data import generate_dataset, write_dataset, write_manifest
from cyclereward.utils.seeding import derive_seed

NAME = "gen-data"
HELP = "generate the synthetic dataset and its manifest"

log = logging.getLogger("data")


def run(cfg: RunConfig, out: Path) -> None:
    art = Artifacts(out)
    d = cfg.data
    ds = generate_dataset(d.n, d.height, d.width, d.kind, d.num_classes, derive_seed(cfg.seed, "data"))
    parts = get_split(cfg, ds)
    write_dataset(art.dataset, ds)
    write_manifest(art.manifest, ds, parts, cfg.seed)
    log.info("dataset -> %s (train=%d val=%d test=%d)", art.dataset, len(parts.train), len(parts.val),
             len(parts.test))
