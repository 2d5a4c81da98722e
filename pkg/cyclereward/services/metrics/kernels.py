# cyclereward/services/metrics/kernels.py
"""Controllability metric kernels on plain numpy maps."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from cyclereward.core.errors import ConfigError, ShapeMismatchError

SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _squeeze(a) -> np.ndarray:
    a = np.asarray(a)
    return a[0] if a.ndim == 3 and a.shape[0] == 1 else a


def _pair(op: str, a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = _squeeze(a), _squeeze(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(op, a.shape, b.shape)
    if a.size == 0:
        raise ConfigError(f"{op}: empty input")
    return a, b


def miou(pred, gt, num_classes: int) -> float:
    """Mean IoU over the classes present in pred or gt."""
    p, g = _pair("miou", pred, gt)
    p, g = p.astype(np.int64), g.astype(np.int64)
    if min(p.min(), g.min()) < 0 or max(p.max(), g.max()) >= num_classes:
        raise ConfigError(f"miou: class index outside [0, {num_classes})")
    ious = []
    for c in range(num_classes):
        pc, gc = p == c, g == c
        union = int((pc | gc).sum())
        if union:
            ious.append(int((pc & gc).sum()) / union)
    return float(np.mean(ious))


def _dilate3x3(m: np.ndarray) -> np.ndarray:
    padded = np.pad(m, 1)
    return sliding_window_view(padded, (3, 3)).any(axis=(2, 3))


def f1_edge(pred, gt, tolerance: int = 0) -> float:
    """
    Edge F1 of maps binarised at 0.5. Pixel-exact by default; tolerance 1
    counts a pixel as matched when the other map has an edge in its 3x3
    neighbourhood. Two empty maps score 1.
    """
    p, g = _pair("f1_edge", pred, gt)
    p, g = p >= 0.5, g >= 0.5
    if not p.any() and not g.any():
        return 1.0
    if tolerance == 0:
        tp = int((p & g).sum())
        fp = int((p & ~g).sum())
        fn = int((~p & g).sum())
        return 2.0 * tp / (2 * tp + fp + fn)
    if tolerance != 1:
        raise ConfigError(f"f1 tolerance must be 0 or 1, got {tolerance}")
    precision = float((p & _dilate3x3(g)).sum()) / p.sum() if p.any() else 0.0
    recall = float((g & _dilate3x3(p)).sum()) / g.sum() if g.any() else 0.0
    return 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def ssim(a, b, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all window x window patches (stride 1), data range 1."""
    x, y = _pair("ssim", a, b)
    if x.ndim != 2 or x.shape[0] < window or x.shape[1] < window:
        raise ConfigError(f"ssim needs a single-channel map of at least {window}x{window}, got {x.shape}")
    wx = sliding_window_view(x.astype(np.float64), (window, window))
    wy = sliding_window_view(y.astype(np.float64), (window, window))
    mx, my = wx.mean(axis=(2, 3)), wy.mean(axis=(2, 3))
    vx = wx.var(axis=(2, 3))
    vy = wy.var(axis=(2, 3))
    cov = ((wx - mx[..., None, None]) * (wy - my[..., None, None])).mean(axis=(2, 3))
    num = (2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
    return float((num / den).mean())


def rmse(a, b) -> float:
    x, y = _pair("rmse", a, b)
    d = x.astype(np.float64) - y.astype(np.float64)
    return float(np.sqrt((d * d).mean()))
