import dataclasses
import hashlib
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from core.exceptions import ConfigError
from core.models import LossWeights

BASE_DIR = Path(__file__).resolve().parent

SEED_ENV_VAR = "IFMMIN_SEED"

STAGE2_SWITCHES = ("no_inv_loss", "no_cascaded_input", "no_ifim")
# every train key that shapes the Stage-2 network and is stored with its checkpoint
STAGE2_SETTINGS = (*STAGE2_SWITCHES, "freeze_student_encoders")


def _int_env(var_name: str, default: int) -> int:
    """Converts an environment variable to int, ignoring extraneous characters.
    Returns default if the number is not found.
    """
    raw = os.getenv(var_name)
    if raw is None:
        return default
    m = re.search(r"-?\d+", raw)
    try:
        return int(m.group()) if m else default
    except Exception:
        return default


@dataclass(frozen=True)
class ModelConfig:
    """Layer widths of the encoders, the imagination cascade and the classifier."""

    acoustic_dim: int = 130
    visual_dim: int = 342
    text_dim: int = 1024
    specific_dim: int = 128
    invariant_dim: int = 128
    text_filters: int = 128
    text_kernel_sizes: tuple[int, ...] = (3, 4, 5)
    classifier_hidden: int = 128
    n_classes: int = 4
    # encoder half of each autoencoder after the input layer; the decoder mirrors it
    ae_hidden_layers: tuple[int, ...] = (256, 128, 64)
    num_autoencoders: int = 5
    share_invariance_encoder: bool = True
    lstm_forget_bias: float = 1.0

    @property
    def feature_width(self) -> int:
        """Width of h (and of H), the concatenation over three modalities."""
        return 3 * self.specific_dim

    @property
    def bottleneck_dim(self) -> int:
        return self.ae_hidden_layers[-1]

    @property
    def joint_width(self) -> int:
        return self.num_autoencoders * self.bottleneck_dim

    @property
    def pretrain_classifier_width(self) -> int:
        return 3 * self.specific_dim + 3 * self.invariant_dim

    @property
    def min_text_length(self) -> int:
        return max(self.text_kernel_sizes)


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation, schedule, cross-validation and ablation switches."""

    batch_size: int = 128
    dropout: float = 0.5
    initial_lr: float = 0.0002
    epochs_per_fold: int = 40
    constant_lr_epochs: int = 20
    folds: int = 10
    folds_to_run: int = 10
    seed: int = 0
    repeats: int = 3
    lambda1: float = 1.0
    lambda2: float = 100.0
    lambda_cmd: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    no_inv_loss: bool = False
    no_cascaded_input: bool = False
    no_ifim: bool = False
    freeze_student_encoders: bool = False

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda1, self.lambda2, self.lambda_cmd)

    @property
    def stage2_flags(self) -> dict[str, bool]:
        return {key: getattr(self, key) for key in STAGE2_SETTINGS}


@dataclass(frozen=True)
class CmdConfig:
    """Central moment discrepancy settings."""

    cmd_k: int = 5
    cmd_sigmoid_squash: bool = False

    @property
    def K(self) -> int:
        return self.cmd_k


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic stand-in for the extracted emotion-recognition features."""

    n_utterances: int = 2000
    latent_dim: int = 16
    class_priors: tuple[float, ...] = (0.30, 0.27, 0.25, 0.18)
    seq_len_a: int = 20
    seq_len_v: int = 16
    seq_len_t: int = 12
    noise_scale: float = 0.5
    latent_std: float = 1.0
    # per-utterance latent noise drawn independently for each modality
    view_noise: float = 0.0
    # scale of the per-modality bias b; zero-filled frames sit this far off the data
    feature_offset: float = 0.1
    # class means sit at class_separation * latent_std along distinct axes
    class_separation: float = 4.0
    data_seed: int = 0

    @property
    def n_classes(self) -> int:
        return len(self.class_priors)

    @property
    def seq_lengths(self) -> tuple[int, int, int]:
        return (self.seq_len_a, self.seq_len_v, self.seq_len_t)


@dataclass(frozen=True)
class PathsConfig:
    """Where artifacts are read from and written to."""

    dataset: Path = Path("data/synthetic.jsonl")
    checkpoints_dir: Path = Path("checkpoints")
    reports_dir: Path = Path("reports")


@dataclass(frozen=True)
class LoggingConfig:
    """Configuration for application logging."""

    level: str = os.getenv("IFMMIN_LOG_LEVEL", "INFO")
    format: str = os.getenv("IFMMIN_LOG_FORMAT", "json")


@dataclass(frozen=True)
class PrometheusConfig:
    """Configuration for prometheus_client exporter."""

    port: int = field(
        default_factory=lambda: _int_env("IFMMIN_METRICS_PORT", 0)
    )  # 0 disables the exporter


_SECTIONS = ("model", "train", "cmd", "synth", "paths")


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, Path):
        return value.as_posix()
    return str(value)


def _coerce(key: str, raw: str, default: Any) -> Any:
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
        if isinstance(default, tuple):
            item_type = type(default[0]) if default else float
            return tuple(item_type(part) for part in text.split(",") if part.strip())
        if isinstance(default, Path):
            return Path(text)
    except ValueError as e:
        raise ConfigError(f"invalid value {raw!r} for key {key!r}") from e
    return text


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run, serialisable as flat ``key = value`` lines."""

    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    cmd: CmdConfig = field(default_factory=CmdConfig)
    synth: SynthSpec = field(default_factory=SynthSpec)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @classmethod
    def known_keys(cls) -> dict[str, str]:
        """Maps each flat key to the section that owns it."""
        defaults = cls()
        return {
            f.name: section
            for section in _SECTIONS
            for f in dataclasses.fields(getattr(defaults, section))
        }

    def with_values(self, values: Mapping[str, Any], *, source: str = "override") -> "RunConfig":
        """Returns a copy with the given keys replaced.

        String values are coerced by the type of the current value; other values
        are used as given.
        """
        owners = self.known_keys()
        updates: dict[str, dict[str, Any]] = {}
        for key, value in values.items():
            section = owners.get(key)
            if section is None:
                raise ConfigError(f"unknown configuration key {key!r} ({source})")
            current = getattr(getattr(self, section), key)
            if isinstance(value, str):
                value = _coerce(key, value, current)
            updates.setdefault(section, {})[key] = value
        replaced = {
            section: dataclasses.replace(getattr(self, section), **changes)
            for section, changes in updates.items()
        }
        return dataclasses.replace(self, **replaced)

    def to_flat(self) -> dict[str, str]:
        flat: dict[str, str] = {}
        for section in _SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                flat[f.name] = _format_value(getattr(obj, f.name))
        return flat

    def canonical_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.to_flat().items()))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    @property
    def run_id(self) -> str:
        return self.fingerprint()[:12]

    def with_ablation(self, flags: Mapping[str, bool]) -> "RunConfig":
        return self.with_values(dict(flags), source="ablation")

    def stage1_fingerprint(self) -> str:
        """Fingerprint with the Stage-2 switches reset; Stage 1 ignores them."""
        return self.with_values(
            {key: False for key in STAGE2_SETTINGS}, source="stage1"
        ).fingerprint()

    def validate(self) -> "RunConfig":
        m, t, c, s = self.model, self.train, self.cmd, self.synth
        problems: list[str] = []
        if abs(sum(s.class_priors) - 1.0) > 1e-9:
            problems.append("class_priors must sum to 1")
        if any(p < 0 for p in s.class_priors):
            problems.append("class_priors must be non-negative")
        if s.n_classes != m.n_classes:
            problems.append(f"class_priors lists {s.n_classes} classes but n_classes = {m.n_classes}")
        if m.specific_dim != m.invariant_dim:
            problems.append("specific_dim and invariant_dim must match so that H' + h is defined")
        if not m.ae_hidden_layers or min(m.ae_hidden_layers) < 1:
            problems.append("ae_hidden_layers must list positive widths")
        if not m.text_kernel_sizes or min(m.text_kernel_sizes) < 1:
            problems.append("text_kernel_sizes must list positive widths")
        if m.num_autoencoders < 1:
            problems.append("num_autoencoders must be >= 1")
        if t.folds < 3:
            problems.append("folds must be >= 3 (test, validation and training parts)")
        if not 1 <= t.folds_to_run <= t.folds:
            problems.append("folds_to_run must lie in [1, folds]")
        if not 0 <= t.constant_lr_epochs <= t.epochs_per_fold or t.epochs_per_fold < 1:
            problems.append("need 0 <= constant_lr_epochs <= epochs_per_fold and epochs_per_fold >= 1")
        if not 0.0 <= t.dropout < 1.0:
            problems.append("dropout must lie in [0, 1)")
        if t.batch_size < 2:
            problems.append("batch_size must be >= 2")
        if t.repeats < 1:
            problems.append("repeats must be >= 1")
        if min(t.lambda1, t.lambda2, t.lambda_cmd) < 0:
            problems.append("loss weights must be >= 0")
        if c.cmd_k < 2:
            problems.append("cmd_k must be >= 2")
        if s.n_utterances < 1 or min(s.seq_lengths) < 1 or s.latent_dim < s.n_classes:
            problems.append("synthetic sizes must be positive and latent_dim >= number of classes")
        if s.view_noise < 0 or s.feature_offset < 0:
            problems.append("view_noise and feature_offset must be >= 0")
        if s.class_separation * math.sqrt(2.0) < 4.0:
            problems.append("class_separation must place class means at least 4 latent_std apart")
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))
        return self


def parse_config_lines(lines: Iterable[str], source: str) -> dict[str, str]:
    """Parses ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {content!r}")
        key, value = (part.strip() for part in content.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        values[key] = value
    return values


def _seed_from_env() -> int | None:
    raw = os.getenv(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw.strip())
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e


def load_run_config(path: Path | None = None, overrides: Iterable[str] = ()) -> RunConfig:
    """File, then ``key=value`` overrides, then the ``IFMMIN_SEED`` variable."""
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        cfg = cfg.with_values(parse_config_lines(text.splitlines(), str(path)), source=str(path))

    pairs: dict[str, str] = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value
    if pairs:
        cfg = cfg.with_values(pairs, source="--set")

    seed = _seed_from_env()
    if seed is not None:
        cfg = cfg.with_values({"seed": seed}, source=SEED_ENV_VAR)
    return cfg.validate()


logging_cfg = LoggingConfig()
prometheus_cfg = PrometheusConfig()
