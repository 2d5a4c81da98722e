# cyclereward/cli/deps.py
"""Shared loaders for the commands: config, artifact paths, dataset, checkpoints, reward models."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from cyclereward.core.errors import ConfigError, MissingArtifactError
from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import RunConfig
from cyclereward.services.data import Dataset, Split, read_dataset, split
from cyclereward.services.denoiser import DenoiserParams, load_checkpoint
from cyclereward.services.metrics import EvalExtractor
from cyclereward.services.rewards import RewardSpec, Segmenter, build_reward_spec, save_segmenter, train_segmenter
from cyclereward.utils.seeding import derive_seed

log = logging.getLogger("cli")


def _field_path(loc) -> str:
    return ".".join(str(part.value if hasattr(part, "value") else part) for part in loc)


def load_config(path: Optional[str], seed: Optional[int] = None) -> RunConfig:
    """Strict JSON config; `seed` overrides the file's global seed."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise MissingArtifactError(f"config not found: {p}")
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{p}: top level must be a JSON object")
    if seed is not None:
        raw = {**raw, "seed": seed}
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            where = _field_path(err["loc"]) or "<root>"
            if err["type"] == "extra_forbidden":
                problems.append(f"unknown key '{where}'")
            else:
                problems.append(f"{where}: {err['msg']}")
        raise ConfigError("invalid config: " + "; ".join(problems)) from exc


@dataclass(frozen=True)
class Artifacts:
    """Fixed artifact names inside the --out directory."""
    out: Path

    @property
    def dataset(self) -> Path:
        return self.out / "dataset.cnds"

    @property
    def manifest(self) -> Path:
        return self.out / "manifest.txt"

    @property
    def init_checkpoint(self) -> Path:
        return self.out / "denoiser_init.cnpp"

    @property
    def pretrained(self) -> Path:
        return self.out / "denoiser_pretrained.cnpp"

    @property
    def finetuned(self) -> Path:
        return self.out / "denoiser_finetuned.cnpp"

    @property
    def reward_segmenter(self) -> Path:
        return self.out / "reward_segmenter.cnpp"

    @property
    def eval_segmenter(self) -> Path:
        return self.out / "eval_segmenter.cnpp"

    @property
    def samples_dir(self) -> Path:
        return self.out / "samples"

    def csv(self, name: str) -> Path:
        return self.out / f"{name}.csv"


def dataset_path(cfg: RunConfig, art: Artifacts) -> Path:
    return Path(cfg.paths.dataset) if cfg.paths.dataset else art.dataset


def get_dataset(cfg: RunConfig, art: Artifacts) -> Dataset:
    ds = read_dataset(dataset_path(cfg, art))
    if ds.kind != cfg.data.kind:
        raise ConfigError(f"dataset holds {ds.kind.value} conditions but config asks for {cfg.data.kind.value}")
    return ds


def get_split(cfg: RunConfig, ds: Dataset) -> Split:
    return split(ds, cfg.data.fractions, derive_seed(cfg.seed, "split"))


def get_checkpoint(explicit: Optional[str], fallback: Path) -> DenoiserParams:
    return load_checkpoint(Path(explicit) if explicit else fallback)


def _masks(ds: Dataset) -> tuple[list, list]:
    return [s.x0 for s in ds], [s.c_v for s in ds]


def get_reward_segmenter(cfg: RunConfig, train: Dataset, art: Artifacts) -> Segmenter:
    images, masks = _masks(train)
    r = cfg.reward
    seg = train_segmenter(images, masks, train.num_classes, depth=r.segmenter_depth, hidden=r.segmenter_hidden,
                          iters=r.extractor_iters, batch=r.extractor_batch, lr=r.extractor_lr,
                          seed=derive_seed(cfg.seed, f"reward-segmenter-d{r.segmenter_depth}"))
    save_segmenter(art.reward_segmenter, seg)
    log.info("reward segmenter (depth %d) -> %s", r.segmenter_depth, art.reward_segmenter)
    return seg


def get_eval_segmenter(cfg: RunConfig, train: Dataset, art: Artifacts) -> Segmenter:
    images, masks = _masks(train)
    r = cfg.reward
    seg = train_segmenter(images, masks, train.num_classes, depth=2, hidden=cfg.eval.segmenter_hidden,
                          iters=r.extractor_iters, batch=r.extractor_batch, lr=r.extractor_lr,
                          seed=derive_seed(cfg.seed, "eval-segmenter"))
    save_segmenter(art.eval_segmenter, seg)
    log.info("evaluation segmenter -> %s", art.eval_segmenter)
    return seg


def get_reward_spec(cfg: RunConfig, train: Dataset, art: Artifacts) -> RewardSpec:
    kind = cfg.data.kind
    segmenter = get_reward_segmenter(cfg, train, art) if kind == ConditionKind.SEG_MASK else None
    return build_reward_spec(kind, lam=cfg.reward.lambdas.get(kind), segmenter=segmenter,
                             edge_low=cfg.reward.edge_low, edge_high=cfg.reward.edge_high)


def get_eval_extractor(cfg: RunConfig, train: Dataset, art: Artifacts) -> EvalExtractor:
    kind = cfg.data.kind
    segmenter = get_eval_segmenter(cfg, train, art) if kind == ConditionKind.SEG_MASK else None
    return EvalExtractor(kind=kind, segmenter=segmenter, edge_low=cfg.reward.edge_low,
                         edge_high=cfg.reward.edge_high)
