# cyclereward/cli/commands/bench_tape.py
import logging
from pathlib import Path

from cyclereward.cli.deps import Artifacts
from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import RunConfig
from cyclereward.services.data import generate_dataset
from cyclereward.services.denoiser import condition_channels, init_params, load_checkpoint
from cyclereward.services.finetune import bench_tape
from cyclereward.services.rewards import build_reward_spec, init_segmenter
from cyclereward.utils.io import write_csv
from cyclereward.utils.seeding import derive_seed

NAME = "bench-tape"
HELP = "measure gradient-tape size per strategy and fit its growth in the sampling steps"

log = logging.getLogger("bench")


def run(cfg: RunConfig, out: Path) -> None:
    art = Artifacts(out)
    d = cfg.data
    # tape sizes depend on shapes only; an untrained model and reward network suffice
    data = generate_dataset(cfg.bench.batch, d.height, d.width, d.kind, d.num_classes,
                            derive_seed(cfg.seed, "bench"))
    if cfg.paths.checkpoint:
        params = load_checkpoint(cfg.paths.checkpoint)
    else:
        params = init_params(cfg.model, condition_channels(d.kind, d.num_classes), derive_seed(cfg.seed, "init"))
    segmenter = None
    if d.kind == ConditionKind.SEG_MASK:
        segmenter = init_segmenter(d.num_classes, cfg.reward.segmenter_depth, cfg.reward.segmenter_hidden,
                                   seed=derive_seed(cfg.seed, "bench-segmenter"))
    spec = build_reward_spec(d.kind, lam=cfg.reward.lambdas.get(d.kind), segmenter=segmenter,
                             edge_low=cfg.reward.edge_low, edge_high=cfg.reward.edge_high)

    result = bench_tape(params, data, spec, cfg.bench, cfg.finetune, derive_seed(cfg.seed, "bench"))
    write_csv(art.csv("tape_stats"), ["strategy", "sampling_steps", "tape_nodes", "saved_elements", "wall_time"],
              ([s.strategy, s.sampling_steps, s.tape_nodes, s.saved_elements, s.wall_time] for s in result.rows))
    f = result.fit
    write_csv(art.csv("tape_fit"), ["slope", "intercept", "r2", "extrapolate_to", "ratio"],
              [[f.slope, f.intercept, f.r2, f.extrapolate_to, f.ratio]])
    log.info("tape stats -> %s", art.csv("tape_stats"))
