# cyclereward/services/rewards/extractors.py
"""
Analytic condition extractors. All are differentiable compositions of tape
ops and take a C x H x W image in [-1, 1]; fixed filters see replicate
padding, so a constant image has no response at the border.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cyclereward.core.errors import ConfigError
from cyclereward.services.autograd import Tensor, ops

SMOOTH = np.outer([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]) / 16.0
SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()
DEPTH_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, 12.0, 1.0], [0.0, 1.0, 0.0]]) / 16.0
MAG_EPS = 1e-12

EDGE_LOW, EDGE_HIGH = 0.1, 0.2


@dataclass(frozen=True)
class SoftEdgeProfile:
    gain: float
    bias: float
    smooth: bool


SOFT_EDGE = SoftEdgeProfile(gain=10.0, bias=0.3, smooth=True)
LINEART = SoftEdgeProfile(gain=25.0, bias=0.2, smooth=False)


def fixed_filter(img: Tensor, kernel: np.ndarray) -> Tensor:
    """Channel-averaged 3x3 filter with replicate padding; returns 1 x H x W."""
    c = img.shape[0]
    w = Tensor.wrap(np.broadcast_to(kernel / c, (1, c, 3, 3)).copy())
    return ops.crop(ops.conv2d3x3(ops.pad_edge(img), w))


def to_unit(img: Tensor) -> Tensor:
    return ops.mul(ops.add(img, 1.0), 0.5)


def sobel_magnitude(img: Tensor, smooth: bool = False) -> Tensor:
    x = to_unit(img)
    if smooth:
        x = fixed_filter(x, SMOOTH)
    gx = fixed_filter(x, SOBEL_X)
    gy = fixed_filter(x, SOBEL_Y)
    return ops.sqrt(ops.add(ops.add(ops.mul(gx, gx), ops.mul(gy, gy)), MAG_EPS))


def extract_soft_edge(img: Tensor, profile: SoftEdgeProfile = SOFT_EDGE) -> Tensor:
    m = sobel_magnitude(img, smooth=profile.smooth)
    return ops.sigmoid(ops.mul(ops.sub(m, profile.bias), profile.gain))


def extract_lineart(img: Tensor) -> Tensor:
    return extract_soft_edge(img, LINEART)


def extract_binary_edge_soft(img: Tensor, low: float = EDGE_LOW, high: float = EDGE_HIGH) -> Tensor:
    """Smoothstep between the two thresholds of the Sobel magnitude."""
    if not 0.0 <= low < high <= 1.0:
        raise ConfigError(f"edge thresholds need 0 <= low < high <= 1, got ({low}, {high})")
    m = sobel_magnitude(img)
    u = ops.clip(ops.mul(ops.sub(m, low), 1.0 / (high - low)), 0.0, 1.0)
    return ops.mul(ops.mul(u, u), ops.sub(3.0, ops.mul(u, 2.0)))


def extract_depth(img: Tensor) -> Tensor:
    """Smoothed luminance mapped to [0, 1]; brighter is nearer."""
    return ops.clip(to_unit(fixed_filter(img, DEPTH_KERNEL)), 0.0, 1.0)
