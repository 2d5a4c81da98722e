# cyclereward/cli/commands/evaluate.py
import logging
from pathlib import Path

from cyclereward.cli.deps import Artifacts, get_checkpoint, get_dataset, get_eval_extractor, get_split
from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import RunConfig
from cyclereward.schemas.reports import DownstreamReport
from cyclereward.services.data import Dataset
from cyclereward.services.denoiser import DenoiserParams, load_checkpoint
from cyclereward.services.diffusion import NoiseSchedule, make_schedule
from cyclereward.services.finetune import x0_error_profile
from cyclereward.services.metrics import evaluate_controllability, model_generator, train_downstream_segmenter
from cyclereward.utils.io import write_csv
from cyclereward.utils.seeding import derive_seed

NAME = "eval"
HELP = "score controllability of the fine-tuned (and baseline) checkpoint"

log = logging.getLogger("eval")

METRIC_HEADER = ["label", "kind", "metric", "value", "n_samples", "seed", "direction"]


def _baseline(cfg: RunConfig, art: Artifacts) -> DenoiserParams | None:
    path = Path(cfg.paths.baseline_checkpoint) if cfg.paths.baseline_checkpoint else art.pretrained
    if cfg.paths.baseline_checkpoint or path.is_file():
        return load_checkpoint(path)
    return None


def _downstream(cfg: RunConfig, models: dict[str, DenoiserParams], train: Dataset, test: Dataset,
                s: NoiseSchedule, seed: int) -> list[DownstreamReport]:
    n = min(cfg.eval.n, len(train))
    masks = [smp.c_v for smp in train.samples[:n]]
    real_images = [smp.x0 for smp in test.samples]
    real_masks = [smp.c_v for smp in test.samples]
    ds_seed = derive_seed(cfg.seed, "downstream")
    reports = [train_downstream_segmenter([smp.x0 for smp in train.samples[:n]], masks, real_images, real_masks,
                                          train.num_classes, "real", iters=cfg.eval.downstream_iters, seed=ds_seed)]
    for label, params in models.items():
        gen = model_generator(params, s, train.num_classes, derive_seed(seed, f"downstream-{label}"),
                              sample_steps=cfg.eval.sample_steps)
        images = [gen(i, train[i]) for i in range(n)]
        reports.append(train_downstream_segmenter(images, masks, real_images, real_masks, train.num_classes,
                                                  label, iters=cfg.eval.downstream_iters, seed=ds_seed))
    return reports


def run(cfg: RunConfig, out: Path) -> None:
    art = Artifacts(out)
    ds = get_dataset(cfg, art)
    parts = get_split(cfg, ds)
    test = parts.test if len(parts.test) else parts.train
    finetuned = get_checkpoint(cfg.paths.checkpoint, art.finetuned)
    models = {}
    baseline = _baseline(cfg, art)
    if baseline is not None:
        models["baseline"] = baseline
    models["finetuned"] = finetuned

    extractor = get_eval_extractor(cfg, parts.train, art)
    seed = derive_seed(cfg.seed, "eval")
    s = make_schedule(cfg.finetune.T, cfg.finetune.beta_start, cfg.finetune.beta_end)
    n = min(cfg.eval.n, len(test))
    rows = []
    for label, params in models.items():
        gen = model_generator(params, s, ds.num_classes, seed, cfg.eval.caption_mode, cfg.eval.sample_steps)
        rep = evaluate_controllability(gen, test.samples, extractor, n, seed, ds.num_classes,
                                       cfg.eval.f1_tolerance, cfg.eval.workers, label=label).report
        rows.append([label, rep.kind.value, rep.metric, rep.value, rep.n_samples, rep.seed, rep.direction.value])
    write_csv(art.csv("metrics"), METRIC_HEADER, rows)

    if cfg.eval.downstream:
        if ds.kind != ConditionKind.SEG_MASK:
            log.warning("downstream comparison only applies to seg_mask data; skipped")
        else:
            reports = _downstream(cfg, models, parts.train, test, s, seed)
            write_csv(art.csv("downstream"), ["source", "accuracy", "miou"],
                      ([r.source, r.accuracy, r.miou] for r in reports))

    if cfg.eval.x0_profile:
        profile_params = models.get("baseline", finetuned)
        val = parts.val if len(parts.val) else test
        samples = val.samples[: cfg.eval.x0_profile_samples]
        profile, rho = x0_error_profile(profile_params, samples, s, ds.num_classes,
                                        derive_seed(cfg.seed, "x0-profile"), cfg.eval.x0_profile_bins)
        write_csv(art.csv("x0_profile"), ["bin", "t_low", "t_high", "mean_error", "spearman"],
                  ([r.bin, r.t_low, r.t_high, r.mean_error, rho] for r in profile))
        log.info("x0 error profile: spearman=%.4f", rho)
    log.info("metrics -> %s", art.csv("metrics"))
