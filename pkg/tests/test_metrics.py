import numpy as np
import pytest

from cyclereward.core.errors import ConfigError, ShapeMismatchError
from cyclereward.services.metrics import f1_edge, mean_class_accuracy, miou, rmse, ssim

CASES = 200


def _miou_loop(p, g, k):
    ious = []
    for c in range(k):
        inter = union = 0
        for i in range(p.shape[0]):
            for j in range(p.shape[1]):
                a, b = p[i, j] == c, g[i, j] == c
                inter += a and b
                union += a or b
        if union:
            ious.append(inter / union)
    return sum(ious) / len(ious)


def _near(m, i, j):
    h, w = m.shape
    return any(m[y, x] for y in range(max(0, i - 1), min(h, i + 2)) for x in range(max(0, j - 1), min(w, j + 2)))


def _f1_loop(p, g, tol):
    p, g = p >= 0.5, g >= 0.5
    if not p.any() and not g.any():
        return 1.0
    if tol == 0:
        tp = fp = fn = 0
        for i in range(p.shape[0]):
            for j in range(p.shape[1]):
                tp += p[i, j] and g[i, j]
                fp += p[i, j] and not g[i, j]
                fn += g[i, j] and not p[i, j]
        return 2 * tp / (2 * tp + fp + fn)
    hits_p = sum(_near(g, i, j) for i, j in zip(*np.nonzero(p)))
    hits_g = sum(_near(p, i, j) for i, j in zip(*np.nonzero(g)))
    prec = hits_p / p.sum() if p.any() else 0.0
    rec = hits_g / g.sum() if g.any() else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def _ssim_loop(x, y, w=8):
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    vals = []
    for i in range(x.shape[0] - w + 1):
        for j in range(x.shape[1] - w + 1):
            a, b = x[i:i + w, j:j + w], y[i:i + w, j:j + w]
            ma, mb = a.mean(), b.mean()
            va, vb = ((a - ma) ** 2).mean(), ((b - mb) ** 2).mean()
            cov = ((a - ma) * (b - mb)).mean()
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return sum(vals) / len(vals)


def test_miou_matches_loop():
    rng = np.random.default_rng(0)
    for _ in range(CASES):
        p, g = rng.integers(0, 4, (8, 8)), rng.integers(0, 4, (8, 8))
        assert abs(miou(p, g, 4) - _miou_loop(p, g, 4)) < 1e-10


@pytest.mark.parametrize("tol", [0, 1])
def test_f1_matches_loop(tol):
    rng = np.random.default_rng(1 + tol)
    for _ in range(CASES):
        density = rng.uniform(0.05, 0.5)
        p = (rng.uniform(size=(8, 8)) < density).astype(float)
        g = (rng.uniform(size=(8, 8)) < density).astype(float)
        assert abs(f1_edge(p, g, tolerance=tol) - _f1_loop(p, g, tol)) < 1e-10


def test_ssim_matches_loop():
    rng = np.random.default_rng(3)
    for _ in range(CASES):
        x = rng.uniform(0, 1, (10, 10))
        y = np.clip(x + rng.normal(0, rng.uniform(0.01, 0.5), x.shape), 0, 1)
        assert abs(ssim(x, y) - _ssim_loop(x, y)) < 1e-10


def test_rmse_matches_loop():
    rng = np.random.default_rng(4)
    for _ in range(CASES):
        a, b = rng.uniform(0, 1, (8, 8)), rng.uniform(0, 1, (8, 8))
        acc = sum((a[idx] - b[idx]) ** 2 for idx in np.ndindex(a.shape))
        assert abs(rmse(a, b) - np.sqrt(acc / 64)) < 1e-10


def test_perfect_agreement():
    rng = np.random.default_rng(5)
    m = rng.integers(0, 4, (8, 8))
    x = rng.uniform(0, 1, (9, 9))
    assert miou(m, m, 4) == 1.0
    assert f1_edge(m >= 2, m >= 2) == 1.0
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)
    assert rmse(x, x) == 0.0


def test_f1_of_two_empty_maps_is_one():
    assert f1_edge(np.zeros((8, 8)), np.zeros((8, 8))) == 1.0
    assert f1_edge(np.zeros((8, 8)), np.eye(8)) == 0.0


def test_f1_tolerance_forgives_one_pixel_shift():
    gt = np.zeros((8, 8))
    gt[:, 3] = 1.0
    shifted = np.roll(gt, 1, axis=1)
    assert f1_edge(shifted, gt) == 0.0
    assert f1_edge(shifted, gt, tolerance=1) == 1.0
    with pytest.raises(ConfigError):
        f1_edge(shifted, gt, tolerance=2)


def test_channel_axis_is_squeezed():
    a = np.zeros((1, 8, 8))
    assert rmse(a, np.zeros((8, 8))) == 0.0


def test_metric_errors():
    with pytest.raises(ShapeMismatchError):
        rmse(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ConfigError):
        miou(np.full((4, 4), 4), np.zeros((4, 4)), 4)
    with pytest.raises(ConfigError):
        ssim(np.zeros((6, 6)), np.zeros((6, 6)))
    with pytest.raises(ConfigError):
        rmse(np.zeros((0,)), np.zeros((0,)))


def test_mean_class_accuracy():
    gt = np.array([[0, 0, 1, 1], [2, 2, 2, 2]])
    pred = np.array([[0, 1, 1, 1], [2, 2, 0, 0]])
    # recalls: class 0 = 1/2, class 1 = 2/2, class 2 = 2/4
    assert mean_class_accuracy(pred, gt, 4) == pytest.approx((0.5 + 1.0 + 0.5) / 3)
    assert mean_class_accuracy(np.zeros_like(gt), gt, 4) == pytest.approx(1 / 3)
