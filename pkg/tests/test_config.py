"""Tests for the run configuration: defaults, parsing, overrides and validation."""

from pathlib import Path

import pytest

from config import (
    BASE_DIR,
    ModelConfig,
    RunConfig,
    _int_env,
    load_run_config,
    parse_config_lines,
)
from core.exceptions import ConfigError
from core.run_manager import ABLATION_VARIANTS


def test_published_defaults():
    cfg = RunConfig()
    m, t = cfg.model, cfg.train
    assert (t.batch_size, t.dropout, t.initial_lr) == (128, 0.5, 0.0002)
    assert (t.lambda1, t.lambda2, t.folds, t.epochs_per_fold) == (1.0, 100.0, 10, 40)
    assert (m.num_autoencoders, m.ae_hidden_layers) == (5, (256, 128, 64))
    assert (m.feature_width, m.joint_width, m.pretrain_classifier_width) == (384, 320, 768)
    assert cfg.cmd.K == 5


def test_default_conf_file_matches_built_in_defaults():
    """configs/default.conf spells out exactly the built-in values."""
    assert load_run_config(BASE_DIR / "configs" / "default.conf") == RunConfig()


def test_desk_conf_loads():
    cfg = load_run_config(BASE_DIR / "configs" / "desk.conf")
    assert cfg.model.specific_dim == cfg.model.invariant_dim
    assert cfg.train.folds_to_run == 1


def test_parse_config_lines_skips_comments_and_blanks():
    lines = ["# header", "", "batch_size = 64  # smaller", "  dropout=0.2"]
    assert parse_config_lines(lines, "x.conf") == {"batch_size": "64", "dropout": "0.2"}


@pytest.mark.parametrize("line", ["batch_size 64", "= 3"])
def test_parse_config_lines_rejects_malformed(line):
    with pytest.raises(ConfigError, match="x.conf:1"):
        parse_config_lines([line], "x.conf")


def test_values_are_coerced_by_type():
    cfg = RunConfig().with_values(
        {
            "batch_size": "32",
            "initial_lr": "1e-3",
            "no_ifim": "yes",
            "ae_hidden_layers": "64, 32",
            "class_priors": "0.5,0.5",
            "dataset": "elsewhere/data.jsonl",
        }
    )
    assert cfg.train.batch_size == 32
    assert cfg.train.initial_lr == 0.001
    assert cfg.train.no_ifim is True
    assert cfg.model.ae_hidden_layers == (64, 32)
    assert cfg.synth.class_priors == (0.5, 0.5)
    assert cfg.paths.dataset == Path("elsewhere/data.jsonl")


@pytest.mark.parametrize(
    "key, value",
    [("batch_size", "many"), ("no_ifim", "perhaps"), ("initial_lr", "nan")],
)
def test_bad_values_rejected(key, value):
    with pytest.raises(ConfigError, match=key):
        RunConfig().with_values({key: value})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="learning_rate"):
        RunConfig().with_values({"learning_rate": "0.1"})


def test_file_then_overrides_then_seed_env(tmp_path, monkeypatch):
    conf = tmp_path / "run.conf"
    conf.write_text("batch_size = 16\nseed = 3\ndropout = 0.1\n")
    monkeypatch.setenv("IFMMIN_SEED", "42")
    cfg = load_run_config(conf, ["dropout=0.3"])
    assert cfg.train.batch_size == 16
    assert cfg.train.dropout == 0.3
    assert cfg.train.seed == 42


def test_malformed_seed_env(monkeypatch):
    monkeypatch.setenv("IFMMIN_SEED", "seven")
    with pytest.raises(ConfigError, match="IFMMIN_SEED"):
        load_run_config()


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "absent.conf")


def test_override_without_equals_sign():
    with pytest.raises(ConfigError, match="key=value"):
        load_run_config(None, ["dropout"])


@pytest.mark.parametrize(
    "values, message",
    [
        ({"class_priors": (0.5, 0.4, 0.05, 0.0)}, "sum to 1"),
        ({"invariant_dim": 64}, "specific_dim and invariant_dim"),
        ({"folds": 2, "folds_to_run": 2}, "folds must be >= 3"),
        ({"folds_to_run": 11}, "folds_to_run"),
        ({"dropout": 1.0}, "dropout"),
        ({"cmd_k": 1}, "cmd_k"),
        ({"class_separation": 2.0}, "class_separation"),
        ({"constant_lr_epochs": 50}, "constant_lr_epochs"),
        ({"lambda2": -1.0}, "loss weights"),
    ],
)
def test_validation_problems(values, message):
    with pytest.raises(ConfigError, match=message):
        RunConfig().with_values(values).validate()


def test_fingerprint_is_stable_and_sensitive():
    a, b = RunConfig(), RunConfig()
    assert a.fingerprint() == b.fingerprint()
    assert len(a.run_id) == 12
    assert a.with_values({"seed": 1}).fingerprint() != a.fingerprint()


def test_canonical_text_is_sorted_key_value_lines():
    lines = RunConfig().canonical_text().splitlines()
    keys = [line.split(" = ")[0] for line in lines]
    assert keys == sorted(keys)
    assert "ae_hidden_layers = 256, 128, 64" in lines


def test_stage1_fingerprint_ignores_stage2_switches():
    base = RunConfig()
    ablated = base.with_ablation({"no_ifim": True, "no_inv_loss": True})
    assert ablated.fingerprint() != base.fingerprint()
    assert ablated.stage1_fingerprint() == base.stage1_fingerprint()
    assert base.with_values({"dropout": 0.1}).stage1_fingerprint() != base.stage1_fingerprint()


def test_model_config_min_text_length():
    assert ModelConfig(text_kernel_sizes=(2, 7, 3)).min_text_length == 7


def test_int_env(monkeypatch):
    """Digits are extracted; anything else falls back to the default."""
    monkeypatch.setenv("IFMMIN_TEST_PORT", "port 9100")
    assert _int_env("IFMMIN_TEST_PORT", 0) == 9100
    monkeypatch.setenv("IFMMIN_TEST_PORT", "none")
    assert _int_env("IFMMIN_TEST_PORT", 5) == 5
    monkeypatch.delenv("IFMMIN_TEST_PORT")
    assert _int_env("IFMMIN_TEST_PORT", 7) == 7


@pytest.mark.parametrize("name", ["w/o L_inv", "w/o cascaded input", "w/o IF-IM"])
def test_ablation_variant_changes_only_its_switch(name):
    """Diffing the canonical texts leaves exactly the variant's own keys."""
    flags = ABLATION_VARIANTS[name]
    base = RunConfig()
    variant = base.with_ablation(flags)
    base_lines = set(base.canonical_text().splitlines())
    variant_lines = set(variant.canonical_text().splitlines())
    assert variant_lines - base_lines == {f"{key} = true" for key in flags}
    assert base_lines - variant_lines == {f"{key} = false" for key in flags}
    assert variant.fingerprint() != base.fingerprint()
    assert variant.stage1_fingerprint() == base.stage1_fingerprint()


def test_stage2_flags_cover_the_freeze_switch():
    cfg = RunConfig().with_values({"freeze_student_encoders": True, "no_ifim": True})
    assert cfg.train.stage2_flags == {
        "no_inv_loss": False,
        "no_cascaded_input": False,
        "no_ifim": True,
        "freeze_student_encoders": True,
    }
    assert RunConfig().with_ablation(cfg.train.stage2_flags) == cfg
