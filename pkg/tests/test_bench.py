import numpy as np
import pytest

from cyclereward.core.errors import ConfigError
from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import BenchSection, TrainConfig
from cyclereward.services.autograd import Tape, Tensor
from cyclereward.services.diffusion import ddpm_step, make_schedule, predict_x0_single_step, respace
from cyclereward.services.finetune import bench_tape, diffusion_loss, fit_line, total_loss
from cyclereward.services.finetune.trainer import resolve_lambda
from cyclereward.services.rewards import build_reward_spec, init_segmenter

TRAIN = TrainConfig(T=10, t_thre=5)


@pytest.fixture
def seg_spec():
    return build_reward_spec(ConditionKind.SEG_MASK, segmenter=init_segmenter(4, hidden=4, seed=0))


@pytest.fixture
def bench_result(seg_params, seg_data, seg_spec):
    bench = BenchSection(t_samples=[1, 2, 3, 4], schedules=[10, 20], batch=1)
    return bench_tape(seg_params, seg_data, seg_spec, bench, TRAIN, seed=0)


def _nodes(build) -> int:
    with Tape() as tape:
        build()
        return tape.node_count


def test_efficient_tape_does_not_depend_on_schedule_length(bench_result):
    short, long_ = bench_result.rows[:2]
    assert short.tape_nodes == long_.tape_nodes > 0
    assert short.saved_elements == long_.saved_elements


def test_full_sampling_tape_grows_linearly(bench_result):
    full = bench_result.rows[2:]
    assert [r.sampling_steps for r in full] == [1, 2, 3, 4]
    nodes = [r.tape_nodes for r in full]
    assert len(set(np.diff(nodes))) == 1
    fit = bench_result.fit
    assert fit.r2 > 0.99
    assert 45.0 <= fit.ratio <= 55.0


def test_full_sampling_tape_grows_with_every_step(bench_result):
    nodes = [r.tape_nodes for r in bench_result.rows[2:]]
    assert all(b > a for a, b in zip(nodes, nodes[1:]))


def test_one_step_chain_differs_from_efficient_step_by_its_loss_subgraphs(bench_result, seg_spec, seg_data):
    # both record one denoiser pass, the extractor and the consistency loss; the
    # chain adds one ancestral step, the efficient step the noise loss, the x0
    # estimate and the combined objective
    shape = seg_data[0].x0.shape
    s = make_schedule(TRAIN.T, TRAIN.beta_start, TRAIN.beta_end)
    chain = respace(s, 1)
    x_t = Tensor.wrap(np.zeros(shape))
    eps = Tensor.wrap(np.ones(shape))
    lam = resolve_lambda(seg_spec, TRAIN)

    def eps_hat():
        return Tensor.parameter(np.zeros(shape))

    def scalar():
        return Tensor.parameter(np.array(1.0))

    ancestral = _nodes(lambda: ddpm_step(x_t, eps_hat(), 1, Tensor.zeros(shape), chain))
    noise_loss = _nodes(lambda: diffusion_loss(eps_hat(), eps))
    x0_estimate = _nodes(lambda: predict_x0_single_step(x_t, eps_hat(), 1, s))
    objective = _nodes(lambda: total_loss(scalar(), scalar(), lam, True))

    efficient, full_one = bench_result.rows[0], bench_result.rows[2]
    assert full_one.sampling_steps == 1
    assert (full_one.tape_nodes - efficient.tape_nodes
            == ancestral - (noise_loss + x0_estimate + objective))


def test_fit_line_exact():
    fit = fit_line([1, 2, 3], [3, 5, 7], extrapolate_to=50)
    assert fit.slope == pytest.approx(2.0) and fit.intercept == pytest.approx(1.0)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.ratio == pytest.approx(101 / 3)


def test_fit_line_needs_two_points():
    with pytest.raises(ConfigError):
        fit_line([2, 2], [1, 3])
    with pytest.raises(ConfigError):
        fit_line([1, 2], [1, 2, 3])


def test_bench_needs_enough_samples(seg_params, seg_data, seg_spec):
    with pytest.raises(ConfigError):
        bench_tape(seg_params, seg_data, seg_spec, BenchSection(batch=7), TRAIN, seed=0)
