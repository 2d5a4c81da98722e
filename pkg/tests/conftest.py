# pytest fixtures
import json
from pathlib import Path

import numpy as np
import pytest

from cyclereward.schemas.common import ConditionKind
from cyclereward.schemas.config import DenoiserConfig
from cyclereward.services.autograd import Tensor
from cyclereward.services.data import generate_dataset
from cyclereward.services.denoiser import condition_channels, init_params
from cyclereward.services.diffusion import make_schedule

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def pytest_addoption(parser):
    parser.addoption("--update-golden", action="store_true", default=False,
                     help="rewrite the recorded outputs under tests/data from this run")


def central_difference(f, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Numerical gradient of scalar f(array) at every element of arr."""
    arr = np.array(arr, dtype=np.float64)
    grad = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        orig = arr[idx]
        arr[idx] = orig + h
        up = f(arr.copy())
        arr[idx] = orig - h
        down = f(arr.copy())
        arr[idx] = orig
        grad[idx] = (up - down) / (2.0 * h)
    return grad


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fd():
    return central_difference


@pytest.fixture
def small_model_cfg():
    return DenoiserConfig(widths=(4, 8, 4), temb_dim=4, caption_dim=4)


@pytest.fixture
def schedule10():
    return make_schedule(10)


@pytest.fixture
def seg_data():
    return generate_dataset(6, 16, 16, ConditionKind.SEG_MASK, 4, seed=3)


@pytest.fixture
def seg_params(small_model_cfg):
    return init_params(small_model_cfg, condition_channels(ConditionKind.SEG_MASK, 4), seed=11)


@pytest.fixture
def live_params(seg_params, rng):
    """Params with a non-zero projection, so the control branch reaches the output."""
    w = seg_params.zero_proj["w"]
    return seg_params.replace({"zero_proj.w": Tensor.parameter(rng.standard_normal(w.shape) * 0.3)})


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        out[key] = _merge(out[key], value) if isinstance(value, dict) and isinstance(out.get(key), dict) else value
    return out


@pytest.fixture
def write_config(tmp_path):
    """Writes the smoke config, with optional nested overrides, and returns its path."""
    def write(overrides: dict | None = None, name: str = "run.json") -> Path:
        cfg = _merge(json.loads((CONFIGS / "smoke.json").read_text()), overrides or {})
        path = tmp_path / name
        path.write_text(json.dumps(cfg))
        return path

    return write
