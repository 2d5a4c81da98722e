import csv
import io
import json
from pathlib import Path

import pytest

from cyclereward.cli.commands import gen_data
from cyclereward.core.errors import DivergenceError, ShapeMismatchError, TapeError
from cyclereward.main import EXIT_CONFIG, EXIT_DIVERGED, EXIT_MISSING, EXIT_OK, main


def _run(command, config, out, *extra):
    return main([command, "--config", str(config), "--out", str(out), *extra])


def test_unknown_key_is_named(write_config, tmp_path, capsys):
    cfg = write_config({"data": {"bogus": 1}})
    assert _run("gen-data", cfg, tmp_path / "out") == EXIT_CONFIG
    assert "unknown key 'data.bogus'" in capsys.readouterr().out


def test_invalid_value(write_config, tmp_path, capsys):
    cfg = write_config({"finetune": {"t_thre": 50}})
    assert _run("gen-data", cfg, tmp_path / "out") == EXIT_CONFIG
    assert "t_thre" in capsys.readouterr().out


@pytest.mark.parametrize("model, field", [
    ({"image_channels": 2}, "model.image_channels"),
    ({"vocab": 4}, "model.vocab"),
])
def test_model_shape_must_fit_the_data(write_config, tmp_path, capsys, model, field):
    assert _run("pretrain", write_config({"model": model}), tmp_path / "out") == EXIT_CONFIG
    assert field in capsys.readouterr().out


@pytest.mark.parametrize("error", [
    ShapeMismatchError("denoiser_forward", (1, 16, 16), (4, 2, 3, 3)),
    TapeError("tape already consumed by a previous backward()"),
])
def test_shape_and_tape_errors_exit_cleanly(write_config, tmp_path, monkeypatch, capsys, error):
    def fail(cfg, out):
        raise error

    monkeypatch.setattr(gen_data, "run", fail)
    assert _run("gen-data", write_config(), tmp_path / "out") == EXIT_CONFIG
    assert str(error) in capsys.readouterr().out


def test_missing_config(tmp_path):
    assert _run("gen-data", tmp_path / "absent.json", tmp_path / "out") == EXIT_MISSING


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1,')
    assert _run("gen-data", bad, tmp_path / "out") == EXIT_CONFIG
    assert "line 1" in capsys.readouterr().out


def test_negative_seed(write_config, tmp_path):
    assert _run("gen-data", write_config(), tmp_path / "out", "--seed", "-1") == EXIT_CONFIG


def test_resolved_config_is_printed(write_config, tmp_path, capsys):
    assert _run("gen-data", write_config(), tmp_path / "out", "--seed", "3") == EXIT_OK
    out = capsys.readouterr().out
    resolved = json.loads(out[out.index("{"):out.index("\n}") + 2])
    assert resolved["seed"] == 3
    assert "lambda" in resolved["finetune"]
    assert resolved["data"]["n"] == 10


def test_pretrain_needs_dataset(write_config, tmp_path):
    assert _run("pretrain", write_config(), tmp_path / "out") == EXIT_MISSING


def test_dataset_kind_must_match_config(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("gen-data", write_config(), out) == EXIT_OK
    depth = write_config({"data": {"kind": "depth_map"}}, name="depth.json")
    assert _run("pretrain", depth, out) == EXIT_CONFIG


def test_zero_iteration_pretrain_saves_init(write_config, tmp_path):
    out = tmp_path / "out"
    cfg = write_config({"pretrain": {"iters": 0}})
    assert _run("gen-data", cfg, out) == EXIT_OK
    assert _run("pretrain", cfg, out) == EXIT_OK
    assert (out / "denoiser_pretrained.cnpp").read_bytes() == (out / "denoiser_init.cnpp").read_bytes()
    assert (out / "pretrain_loss.csv").read_text() == "iter,t,l_train\n"


def test_full_sampling_budget_exit_code(write_config, tmp_path):
    out = tmp_path / "out"
    cfg = write_config({"finetune": {"strategy": "full-sampling", "t_sample": 11}})
    assert _run("gen-data", cfg, out) == EXIT_OK
    assert _run("pretrain", cfg, out) == EXIT_OK
    assert _run("finetune", cfg, out) == EXIT_CONFIG


def test_divergence_exit_code(write_config, tmp_path, monkeypatch):
    def diverge(cfg, out):
        raise DivergenceError("non-finite loss at iteration 0")

    monkeypatch.setattr(gen_data, "run", diverge)
    assert _run("gen-data", write_config(), tmp_path / "out") == EXIT_DIVERGED


def test_smoke_pipeline(write_config, tmp_path):
    out = tmp_path / "out"
    cfg = write_config({"eval": {"x0_profile": True, "x0_profile_bins": 2, "x0_profile_samples": 1}})
    for command in ("gen-data", "pretrain", "finetune", "eval", "sample", "bench-tape"):
        assert _run(command, cfg, out) == EXIT_OK, command
    for name in ("dataset.cnds", "manifest.txt", "denoiser_init.cnpp", "denoiser_pretrained.cnpp",
                 "denoiser_finetuned.cnpp", "reward_segmenter.cnpp", "eval_segmenter.cnpp",
                 "pretrain_loss.csv", "finetune_steps.csv", "metrics.csv", "x0_profile.csv",
                 "tape_stats.csv", "tape_fit.csv", "samples/sample_000.pgm"):
        assert (out / name).is_file(), name
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "label,kind,metric,value,n_samples,seed,direction"
    assert [row.split(",")[0] for row in metrics[1:]] == ["baseline", "finetuned"]
    assert len((out / "finetune_steps.csv").read_text().splitlines()) == 3


@pytest.mark.parametrize("strategy", ["efficient", "reward-only", "diffusion-only"])
def test_runs_are_reproducible(write_config, tmp_path, strategy):
    cfg = write_config({"finetune": {"strategy": strategy}})
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        for command in ("gen-data", "pretrain", "finetune"):
            assert _run(command, cfg, out) == EXIT_OK
    for name in ("dataset.cnds", "manifest.txt", "denoiser_pretrained.cnpp", "denoiser_finetuned.cnpp",
                 "pretrain_loss.csv", "finetune_steps.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_pipeline_outputs_are_byte_identical(write_config, tmp_path):
    cfg = write_config()
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        for command in ("gen-data", "pretrain", "finetune", "eval", "sample"):
            assert _run(command, cfg, out) == EXIT_OK
    for name in ("metrics.csv", "finetune_steps.csv", "samples/sample_000.pgm", "eval_segmenter.cnpp"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


SMOKE = Path(__file__).resolve().parent.parent / "configs" / "smoke.json"
GOLDEN_METRICS = Path(__file__).resolve().parent / "data" / "smoke_metrics.csv"
METRIC_REL_TOL = 1e-6


def test_smoke_metrics_match_recorded_run(tmp_path, request):
    out = tmp_path / "out"
    for command in ("gen-data", "pretrain", "finetune", "eval"):
        assert _run(command, SMOKE, out) == EXIT_OK, command
    produced = (out / "metrics.csv").read_text()
    if request.config.getoption("--update-golden") or not GOLDEN_METRICS.is_file():
        GOLDEN_METRICS.parent.mkdir(parents=True, exist_ok=True)
        GOLDEN_METRICS.write_text(produced)
        pytest.skip(f"recorded {GOLDEN_METRICS.name}")

    expected = list(csv.DictReader(io.StringIO(GOLDEN_METRICS.read_text())))
    actual = list(csv.DictReader(io.StringIO(produced)))

    def fixed(rows):
        return [{k: v for k, v in row.items() if k != "value"} for row in rows]

    assert fixed(actual) == fixed(expected)
    for got, want in zip(actual, expected):
        assert float(got["value"]) == pytest.approx(float(want["value"]), rel=METRIC_REL_TOL, abs=1e-9), got["label"]
