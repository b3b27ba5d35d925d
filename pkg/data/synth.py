"""Synthetic three-modality emotion data driven by one shared latent per utterance.

Each utterance draws a class from the priors and a latent ``z`` around that
class's mean. Every modality renders frames as a fixed affine map of ``z``
plus independent noise, so with ``view_noise = 0`` any one modality carries
enough signal to reconstruct the others. A positive ``view_noise`` gives each
modality its own noisy copy of ``z``; one modality then says less about the
class than all three together.
"""

from __future__ import annotations

import math

import numpy as np
import structlog

from config import ModelConfig, SynthSpec
from core.exceptions import ConfigError
from core.models import MODALITY_ORDER, Modality, RawUtterance
from utils.rng import philox

logger = structlog.get_logger(__name__)


def _check_spec(spec: SynthSpec) -> None:
    priors = np.asarray(spec.class_priors, dtype=np.float64)
    if priors.size == 0 or np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-9:
        raise ConfigError(f"class_priors must be non-negative and sum to 1, got {spec.class_priors}")
    if spec.latent_dim < spec.n_classes:
        raise ConfigError("latent_dim must be >= number of classes")
    if spec.n_utterances < 1 or min(spec.seq_lengths) < 1:
        raise ConfigError("n_utterances and sequence lengths must be >= 1")
    if spec.noise_scale < 0 or spec.latent_std <= 0:
        raise ConfigError("noise_scale must be >= 0 and latent_std > 0")
    if spec.view_noise < 0 or spec.feature_offset < 0:
        raise ConfigError("view_noise and feature_offset must be >= 0")


def class_means(spec: SynthSpec) -> np.ndarray:
    """Class c sits at ``class_separation * latent_std`` along axis c."""
    means = np.zeros((spec.n_classes, spec.latent_dim))
    means[np.arange(spec.n_classes), np.arange(spec.n_classes)] = spec.class_separation * spec.latent_std
    return means


def modality_maps(spec: SynthSpec, dims: ModelConfig) -> dict[Modality, tuple[np.ndarray, np.ndarray]]:
    """Per-modality ``(A, b)`` with ``A`` of shape latent_dim x D, drawn once from the seed."""
    widths = {
        Modality.ACOUSTIC: dims.acoustic_dim,
        Modality.VISUAL: dims.visual_dim,
        Modality.TEXTUAL: dims.text_dim,
    }
    maps = {}
    for modality in MODALITY_ORDER:
        rng = philox(spec.data_seed, f"synth_map_{modality.value}")
        A = rng.standard_normal((spec.latent_dim, widths[modality])) / math.sqrt(spec.latent_dim)
        b = spec.feature_offset * rng.standard_normal(widths[modality])
        maps[modality] = (A, b)
    return maps


def _as_float32_values(x: np.ndarray) -> np.ndarray:
    return x.astype(np.float32).astype(np.float64)


def generate(spec: SynthSpec, dims: ModelConfig | None = None) -> list[RawUtterance]:
    """Deterministic dataset for ``spec.data_seed``; utterance ``i`` uses its own stream."""
    _check_spec(spec)
    dims = dims or ModelConfig()
    priors = np.asarray(spec.class_priors, dtype=np.float64)
    priors = priors / priors.sum()
    means = class_means(spec)
    maps = modality_maps(spec, dims)
    max_steps = dict(zip(MODALITY_ORDER, spec.seq_lengths))

    utterances = []
    for i in range(spec.n_utterances):
        rng = philox(spec.data_seed, "synth_utterance", i)
        label = int(rng.choice(spec.n_classes, p=priors))
        z = means[label] + spec.latent_std * rng.standard_normal(spec.latent_dim)
        frames = {}
        for modality in MODALITY_ORDER:
            A, b = maps[modality]
            longest = max_steps[modality]
            steps = int(rng.integers(math.ceil(longest / 2), longest + 1))
            view = z
            if spec.view_noise > 0:
                view = z + spec.view_noise * rng.standard_normal(spec.latent_dim)
            clean = view @ A + b
            noise = spec.noise_scale * rng.standard_normal((steps, A.shape[1]))
            frames[modality] = _as_float32_values(clean[None, :] + noise)
        utterances.append(
            RawUtterance(
                uid=f"utt{i:05d}",
                acoustic=frames[Modality.ACOUSTIC],
                visual=frames[Modality.VISUAL],
                textual=frames[Modality.TEXTUAL],
                label=label,
            )
        )
    logger.info("synthetic_dataset_generated", utterances=len(utterances), seed=spec.data_seed)
    return utterances
