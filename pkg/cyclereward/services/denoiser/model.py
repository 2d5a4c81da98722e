# cyclereward/services/denoiser/model.py
"""
Conditional noise predictor eps_theta(x_t, t, c_t, c_v).

Trunk (base): three 3x3 conv blocks, widths w1/w2/w3, with a skip from the
first block into the third. Every block adds a per-channel conditioning
vector built from the sinusoidal timestep embedding and the caption
embedding c_t. The control branch mirrors the first two trunk blocks, reads
the visual condition c_v through a hint conv and joins the trunk after the
second block through a 1x1 projection that starts at exactly zero.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from cyclereward.core.errors import ConfigError, ShapeMismatchError
from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import DenoiserConfig
from cyclereward.services.autograd import Tensor, ops
from cyclereward.services.denoiser.embedding import timestep_embedding
from cyclereward.services.denoiser.params import GROUPS, DenoiserParams
from cyclereward.services.diffusion.noise import keyed_generator

log = logging.getLogger("denoiser")

INIT_STREAM = 0x1417


def condition_channels(kind: ConditionKind, num_classes: int) -> int:
    """c_v is one-hot over classes for segmentation, a single map otherwise."""
    return num_classes if kind == ConditionKind.SEG_MASK else 1


def _he(rng: np.random.Generator, *shape: int) -> Tensor:
    fan_in = int(np.prod(shape[1:]))
    return Tensor.parameter(rng.standard_normal(shape) * np.sqrt(2.0 / fan_in))


def _small(rng: np.random.Generator, *shape: int, scale: float = 0.1) -> Tensor:
    return Tensor.parameter(rng.standard_normal(shape) * scale)


def _zeros(*shape: int) -> Tensor:
    return Tensor.parameter(np.zeros(shape))


def init_params(cfg: DenoiserConfig, cond_channels: int, seed: int) -> DenoiserParams:
    w1, w2, w3 = cfg.widths
    if w3 != w1:
        raise ConfigError(f"decoder width {w3} must equal first encoder width {w1} (skip connection)")
    if cond_channels < 1:
        raise ConfigError(f"condition needs at least one channel, got {cond_channels}")
    c, e, d = cfg.image_channels, cfg.temb_dim, cfg.caption_dim
    rng = keyed_generator(seed, INIT_STREAM)

    base = {}
    for name, cin, cout in (("enc1", c, w1), ("enc2", w1, w2), ("dec", w2, w3)):
        base[f"{name}.w"] = _he(rng, cout, cin, 3, 3)
        base[f"{name}.b"] = _zeros(cout)
        base[f"{name}.pt"] = _small(rng, cout, e)
        base[f"{name}.pc"] = _small(rng, cout, d)
    base["out.w"] = _he(rng, c, w3, 3, 3)
    base["out.b"] = _zeros(c)
    base["caption.table"] = _small(rng, cfg.vocab, d, scale=0.5)

    control = {
        "hint.w": _he(rng, w1, cond_channels, 3, 3),
        "hint.b": _zeros(w1),
        "ctrl1.w": _he(rng, w1, c, 3, 3),
        "ctrl1.b": _zeros(w1),
        "ctrl1.pt": _small(rng, w1, e),
        "ctrl1.pc": _small(rng, w1, d),
        "ctrl2.w": _he(rng, w2, w1, 3, 3),
        "ctrl2.b": _zeros(w2),
    }
    zero_proj = {"w": _zeros(w2, w2), "b": _zeros(w2)}
    params = DenoiserParams(base=base, control=control, zero_proj=zero_proj)
    log.debug("initialised denoiser: %d tensors, widths=%s, cond_channels=%d", len(params), cfg.widths, cond_channels)
    return params


def freeze_base(p: DenoiserParams) -> DenoiserParams:
    """Base tensors stop requiring grad; control and zero_proj stay trainable."""
    return DenoiserParams(
        base={k: v.with_grad(False) if v.requires_grad else v for k, v in p.base.items()},
        control={k: v if v.requires_grad else v.with_grad(True) for k, v in p.control.items()},
        zero_proj={k: v if v.requires_grad else v.with_grad(True) for k, v in p.zero_proj.items()},
    )


def unfreeze(p: DenoiserParams) -> DenoiserParams:
    """Every tensor trainable, as in pretraining."""
    return DenoiserParams(**{
        group: {k: v if v.requires_grad else v.with_grad(True) for k, v in getattr(p, group).items()}
        for group in GROUPS
    })


def caption_embedding(p: DenoiserParams, caption_id: Optional[int]) -> Tensor:
    """Learned c_t row for `caption_id`; None is the empty prompt (zero vector)."""
    table = p.base["caption.table"]
    vocab, dim = table.shape
    if caption_id is None:
        return Tensor.zeros((dim,))
    if not 0 <= int(caption_id) < vocab:
        raise ConfigError(f"caption id {caption_id} outside vocabulary [0, {vocab})")
    onehot = np.zeros((1, vocab))
    onehot[0, int(caption_id)] = 1.0
    return ops.reshape(ops.matmul(Tensor.wrap(onehot), table), (dim,))


def _block_cond(pt: Tensor, pc: Tensor, temb: Tensor, ct_col: Tensor, spatial: tuple[int, int]) -> Tensor:
    ch = pt.shape[0]
    v = ops.add(ops.matmul(pt, temb), ops.matmul(pc, ct_col))
    return ops.broadcast(ops.reshape(v, (ch,)), (ch,) + spatial)


def _check_inputs(p: DenoiserParams, x_t: Tensor, c_t: Tensor, c_v: Tensor) -> None:
    enc1 = p.base["enc1.w"]
    hint = p.control["hint.w"]
    dim = p.base["caption.table"].shape[1]
    if x_t.ndim != 3 or x_t.shape[0] != enc1.shape[1]:
        raise ShapeMismatchError("denoiser_forward", x_t.shape, enc1.shape, "x_t must be C x H x W")
    if c_v.ndim != 3 or c_v.shape[0] != hint.shape[1] or c_v.shape[1:] != x_t.shape[1:]:
        raise ShapeMismatchError("denoiser_forward", x_t.shape, c_v.shape, "c_v must be C_v x H x W at the x_t size")
    if c_t.shape != (dim,):
        raise ShapeMismatchError("denoiser_forward", c_t.shape, (dim,), "c_t must be a caption-dim vector")


def denoiser_forward(p: DenoiserParams, x_t: Tensor, t: int, c_t: Tensor, c_v: Tensor) -> Tensor:
    _check_inputs(p, x_t, c_t, c_v)
    b, ctl, zp = p.base, p.control, p.zero_proj
    spatial = tuple(x_t.shape[1:])
    temb_dim = b["enc1.pt"].shape[1]
    temb = Tensor.wrap(timestep_embedding(int(t), temb_dim).reshape(temb_dim, 1))
    ct_col = ops.reshape(c_t, (c_t.shape[0], 1))

    def block(x: Tensor, name: str, params: dict[str, Tensor], extra: Optional[Tensor] = None) -> Tensor:
        h = ops.add(ops.conv2d3x3(x, params[f"{name}.w"], params[f"{name}.b"]),
                    _block_cond(params[f"{name}.pt"], params[f"{name}.pc"], temb, ct_col, spatial))
        if extra is not None:
            h = ops.add(h, extra)
        return ops.relu(h)

    h1 = block(x_t, "enc1", b)
    h2 = block(h1, "enc2", b)

    hint = ops.conv2d3x3(c_v, ctl["hint.w"], ctl["hint.b"])
    g1 = block(x_t, "ctrl1", ctl, extra=hint)
    g2 = ops.relu(ops.conv2d3x3(g1, ctl["ctrl2.w"], ctl["ctrl2.b"]))
    h2 = ops.add(h2, ops.conv2d1x1(g2, zp["w"], zp["b"]))

    d = block(h2, "dec", b, extra=h1)
    return ops.conv2d3x3(d, b["out.w"], b["out.b"])


class ControlledDenoiser:
    """Callable view of a parameter set, usable wherever a noise predictor is expected."""

    def __init__(self, params: DenoiserParams):
        self.params = params

    def __call__(self, x: Tensor, t: int, c_t: Tensor, c_v: Tensor) -> Tensor:
        return denoiser_forward(self.params, x, t, c_t, c_v)
