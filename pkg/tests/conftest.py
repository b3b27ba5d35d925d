import sys
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest

# Add the repository root to sys.path so that 'autograd', 'model', ... import in CI.
PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from config import RunConfig  # noqa: E402
from data.dataset import collate  # noqa: E402
from data.synth import generate  # noqa: E402

# Small enough that a full pretrain/train/eval cycle takes seconds.
TINY_VALUES: Dict[str, Any] = {
    "acoustic_dim": 5,
    "visual_dim": 6,
    "text_dim": 7,
    "specific_dim": 4,
    "invariant_dim": 4,
    "text_filters": 3,
    "text_kernel_sizes": (2, 3),
    "classifier_hidden": 5,
    "ae_hidden_layers": (6, 3),
    "num_autoencoders": 2,
    "batch_size": 8,
    "dropout": 0.5,
    "initial_lr": 0.01,
    "epochs_per_fold": 2,
    "constant_lr_epochs": 1,
    "folds": 3,
    "folds_to_run": 1,
    "repeats": 1,
    "n_utterances": 30,
    "latent_dim": 4,
    "seq_len_a": 4,
    "seq_len_v": 3,
    "seq_len_t": 4,
}


def tiny_config_lines(tmp_path: Path) -> str:
    """The tiny configuration as ``key = value`` text, paths under ``tmp_path``."""
    cfg = make_tiny_config(tmp_path)
    keys = list(TINY_VALUES) + ["dataset", "checkpoints_dir", "reports_dir"]
    flat = cfg.to_flat()
    return "".join(f"{key} = {flat[key]}\n" for key in keys)


def make_tiny_config(tmp_path: Path, **overrides: Any) -> RunConfig:
    values = {
        **TINY_VALUES,
        "dataset": tmp_path / "data" / "tiny.jsonl",
        "checkpoints_dir": tmp_path / "checkpoints",
        "reports_dir": tmp_path / "reports",
        **overrides,
    }
    return RunConfig().with_values(values, source="tests").validate()


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch):
    """Keeps a developer's shell settings out of the tests."""
    for var in ("IFMMIN_SEED", "SENTRY_DSN", "IFMMIN_METRICS_PORT", "IFMMIN_ENV"):
        monkeypatch.delenv(var, raising=False)
    yield


@pytest.fixture
def tiny_config(tmp_path: Path) -> RunConfig:
    """RunConfig with toy widths and artifact paths inside ``tmp_path``."""
    return make_tiny_config(tmp_path)


@pytest.fixture
def tiny_dataset(tiny_config: RunConfig):
    """Thirty synthetic utterances matching ``tiny_config``."""
    return generate(tiny_config.synth, tiny_config.model)


@pytest.fixture
def tiny_batch(tiny_dataset, tiny_config: RunConfig):
    """The first eight utterances, padded."""
    return collate(tiny_dataset[:8], tiny_config.model.min_text_length)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
