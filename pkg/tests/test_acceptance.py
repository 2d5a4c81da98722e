"""
Desk-scale directional runs. Each pretrains real toy denoisers, so the whole
module is marked slow and deselected by default; run with `pytest -m slow`.
"""
from functools import cache
from pathlib import Path

import numpy as np
import pytest

from cyclereward.cli.deps import load_config
from cyclereward.schemas.common import ConditionKind
from cyclereward.services.data import generate_dataset, split
from cyclereward.services.denoiser import condition_channels, init_params
from cyclereward.services.diffusion import make_schedule
from cyclereward.services.finetune import (
    pretrain,
    reward_finetune_efficient,
    reward_only,
    validation_loss,
    x0_error_profile,
)
from cyclereward.services.metrics import (
    EvalExtractor,
    evaluate_controllability,
    model_generator,
    train_downstream_segmenter,
)
from cyclereward.services.rewards import build_reward_spec, train_segmenter
from cyclereward.utils.seeding import derive_seed

pytestmark = pytest.mark.slow

DESK = Path(__file__).resolve().parent.parent / "configs" / "desk.json"
SEEDS = (0, 1, 2)


@cache
def _config(kind: ConditionKind):
    cfg = load_config(str(DESK))
    return cfg.model_copy(update={"data": cfg.data.model_copy(update={"kind": kind})})


@cache
def _prepared(kind: ConditionKind, seed: int):
    """(config, split, pretrained params) for one kind and seed."""
    cfg = _config(kind)
    d = cfg.data
    ds = generate_dataset(d.n, d.height, d.width, kind, d.num_classes, derive_seed(seed, "data"))
    parts = split(ds, d.fractions, derive_seed(seed, "split"))
    params = init_params(cfg.model, condition_channels(kind, d.num_classes), derive_seed(seed, "init"))
    pre = pretrain(params, parts.train, cfg.pretrain, derive_seed(seed, "pretrain")).params
    return cfg, parts, pre


def _segmenter(parts, seed: int, depth: int, hidden: int, label: str):
    train = parts.train
    return train_segmenter([s.x0 for s in train], [s.c_v for s in train], train.num_classes, depth=depth,
                           hidden=hidden, iters=300, seed=derive_seed(seed, label))


def _reward_spec(kind: ConditionKind, seed: int, depth: int = 2):
    cfg, parts, _ = _prepared(kind, seed)
    seg = None
    if kind == ConditionKind.SEG_MASK:
        seg = _segmenter(parts, seed, depth, cfg.reward.segmenter_hidden, f"reward-segmenter-d{depth}")
    return build_reward_spec(kind, segmenter=seg)


@cache
def _eval_extractor(kind: ConditionKind, seed: int) -> EvalExtractor:
    cfg, parts, _ = _prepared(kind, seed)
    seg = None
    if kind == ConditionKind.SEG_MASK:
        seg = _segmenter(parts, seed, 2, cfg.eval.segmenter_hidden, "eval-segmenter")
    return EvalExtractor(kind, segmenter=seg)


@cache
def _finetuned(kind: ConditionKind, seed: int, depth: int = 2):
    cfg, parts, pre = _prepared(kind, seed)
    spec = _reward_spec(kind, seed, depth)
    return reward_finetune_efficient(pre, parts.train, spec, cfg.finetune, derive_seed(seed, "finetune")).params


def _controllability(kind: ConditionKind, seed: int, params) -> float:
    cfg, parts, _ = _prepared(kind, seed)
    s = make_schedule(cfg.finetune.T, cfg.finetune.beta_start, cfg.finetune.beta_end)
    eval_seed = derive_seed(seed, "eval")
    gen = model_generator(params, s, parts.test.num_classes, eval_seed)
    n = min(cfg.eval.n, len(parts.test))
    return evaluate_controllability(gen, parts.test.samples, _eval_extractor(kind, seed), n, eval_seed,
                                    parts.test.num_classes, workers=cfg.eval.workers).report.value


def test_single_step_error_grows_with_t():
    cfg, _, pre = _prepared(ConditionKind.SEG_MASK, 0)
    d = cfg.data
    val = generate_dataset(100, d.height, d.width, d.kind, d.num_classes, derive_seed(0, "x0-profile-data"))
    s = make_schedule(cfg.pretrain.T, cfg.pretrain.beta_start, cfg.pretrain.beta_end)
    rows, rho = x0_error_profile(pre, list(val), s, d.num_classes, seed=derive_seed(0, "x0-profile"), bins=10)
    errors = [r.mean_error for r in rows]
    assert all(b >= a for a, b in zip(errors, errors[1:]))
    assert rho > 0.9


def test_segmentation_controllability_improves():
    kind = ConditionKind.SEG_MASK
    gains = [
        _controllability(kind, seed, _finetuned(kind, seed, 2)) - _controllability(kind, seed, _prepared(kind, seed)[2])
        for seed in SEEDS
    ]
    wins = sum(g >= 0.02 for g in gains)
    assert wins >= 2


@pytest.mark.parametrize("kind, better", [
    (ConditionKind.SOFT_EDGE, np.greater),
    (ConditionKind.DEPTH_MAP, np.less),
])
def test_dense_controllability_moves_the_right_way(kind, better):
    wins = sum(
        bool(better(_controllability(kind, seed, _finetuned(kind, seed, 2)),
                    _controllability(kind, seed, _prepared(kind, seed)[2])))
        for seed in SEEDS
    )
    assert wins >= 2


def test_reward_only_distorts_more_than_combined():
    kind = ConditionKind.SEG_MASK
    for seed in SEEDS:
        cfg, parts, pre = _prepared(kind, seed)
        spec = _reward_spec(kind, seed)
        s = make_schedule(cfg.finetune.T, cfg.finetune.beta_start, cfg.finetune.beta_end)
        only = reward_only(pre, parts.train, spec, cfg.finetune, derive_seed(seed, "finetune")).params
        combined = _finetuned(kind, seed, 2)
        val_seed = derive_seed(seed, "validation")
        samples = list(parts.val)
        assert (validation_loss(only, samples, s, parts.val.num_classes, val_seed)
                > validation_loss(combined, samples, s, parts.val.num_classes, val_seed))


def test_stronger_reward_model_is_not_worse():
    kind = ConditionKind.SEG_MASK
    wins = sum(
        _controllability(kind, seed, _finetuned(kind, seed, 2))
        >= _controllability(kind, seed, _finetuned(kind, seed, 1))
        for seed in SEEDS
    )
    assert wins >= 2


def test_downstream_segmenter_prefers_finetuned_generations():
    kind = ConditionKind.SEG_MASK
    wins = 0
    for seed in SEEDS:
        cfg, parts, pre = _prepared(kind, seed)
        s = make_schedule(cfg.finetune.T, cfg.finetune.beta_start, cfg.finetune.beta_end)
        train = parts.train
        n = min(cfg.eval.n, len(train))
        masks = [smp.c_v for smp in train.samples[:n]]
        real = ([smp.x0 for smp in parts.test], [smp.c_v for smp in parts.test])
        ds_seed = derive_seed(seed, "downstream")
        acc = {}
        for label, params in (("baseline", pre), ("finetuned", _finetuned(kind, seed, 2))):
            gen = model_generator(params, s, train.num_classes, derive_seed(seed, f"downstream-{label}"))
            images = [gen(i, train[i]) for i in range(n)]
            acc[label] = train_downstream_segmenter(images, masks, *real, train.num_classes, label,
                                                    iters=cfg.eval.downstream_iters, seed=ds_seed).accuracy
        wins += acc["finetuned"] >= acc["baseline"]
    assert wins >= 2
