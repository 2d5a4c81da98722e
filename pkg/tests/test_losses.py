import math

import numpy as np
import pytest

from cyclereward.core.errors import DatasetError, ShapeMismatchError
from cyclereward.schemas.common import ConditionKind
from cyclereward.services.autograd import Tensor
from cyclereward.services.finetune import total_loss
from cyclereward.services.rewards import build_reward_spec, consistency_loss, cross_entropy, mse, one_hot


def test_mse_of_identical_maps_is_zero(rng):
    a = Tensor.wrap(rng.uniform(0, 1, (1, 6, 6)))
    assert mse(a, a).item() == 0.0


def test_mse_matches_loop(rng):
    a, b = rng.uniform(0, 1, (1, 5, 7)), rng.uniform(0, 1, (1, 5, 7))
    acc = 0.0
    for idx in np.ndindex(a.shape):
        acc += (a[idx] - b[idx]) ** 2
    assert abs(mse(Tensor.wrap(a), Tensor.wrap(b)).item() - acc / a.size) < 1e-12


def test_mse_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        mse(Tensor.zeros((1, 4, 4)), Tensor.zeros((1, 4, 5)))


def test_cross_entropy_of_uniform_logits_is_log_k(rng):
    target = rng.integers(0, 4, (6, 6))
    assert cross_entropy(Tensor.zeros((4, 6, 6)), target, 4).item() == pytest.approx(math.log(4), abs=1e-12)


def test_cross_entropy_matches_loop(rng):
    logits = rng.standard_normal((4, 3, 5))
    target = rng.integers(0, 4, (3, 5))
    acc = 0.0
    for i in range(3):
        for j in range(5):
            z = logits[:, i, j]
            acc -= z[target[i, j]] - math.log(np.exp(z).sum())
    assert cross_entropy(Tensor.wrap(logits), target, 4).item() == pytest.approx(acc / 15, abs=1e-12)


def test_cross_entropy_rejects_out_of_range_class():
    target = np.zeros((4, 4), dtype=np.int64)
    target[1, 2] = 4
    with pytest.raises(DatasetError):
        cross_entropy(Tensor.zeros((4, 4, 4)), target, 4)


def test_one_hot_accepts_channel_axis():
    cm = np.array([[[0, 1], [3, 2]]])
    out = one_hot(cm, 4)
    assert out.shape == (4, 2, 2)
    np.testing.assert_array_equal(out.argmax(axis=0), cm[0])


def test_consistency_loss_dispatches_on_loss_form(rng):
    depth = build_reward_spec(ConditionKind.DEPTH_MAP)
    a, b = Tensor.wrap(rng.uniform(0, 1, (1, 4, 4))), Tensor.wrap(rng.uniform(0, 1, (1, 4, 4)))
    assert consistency_loss(depth, a, b).item() == mse(a, b).item()


def test_total_loss_combined():
    lt, lr = Tensor.wrap(np.array(2.0)), Tensor.wrap(np.array(3.0))
    assert total_loss(lt, lr, 0.5, active=True).item() == 3.5
    assert total_loss(lt, lr, 0.5, active=False) is lt
    assert total_loss(lt, None, 0.5, active=True) is lt
    assert total_loss(lt, lr, 0.0, active=True) is lt


def test_total_loss_reward_only():
    lt, lr = Tensor.wrap(np.array(2.0)), Tensor.wrap(np.array(3.0))
    assert total_loss(lt, lr, 2.0, active=True, reward_only=True).item() == 6.0
    assert total_loss(lt, lr, 2.0, active=False, reward_only=True) is None
