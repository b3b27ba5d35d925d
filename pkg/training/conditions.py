"""Missing-modality conditions: sampling and masking."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from core.models import ALL_CONDITIONS, MODALITY_ORDER, MissingCondition, RawUtterance


def sample_condition(rng: np.random.Generator) -> MissingCondition:
    """Uniform draw over the six test conditions."""
    return ALL_CONDITIONS[int(rng.integers(len(ALL_CONDITIONS)))]


def apply_missing(u: RawUtterance, condition: MissingCondition) -> RawUtterance:
    """Replaces every unavailable modality by a single all-zero frame."""
    masked = u
    for modality in MODALITY_ORDER:
        if not condition.is_available(modality):
            width = u.frames(modality).shape[1]
            masked = masked.with_frames(modality, np.zeros((1, width), dtype=np.float64))
    return masked


def mask_batch(utterances: Sequence[RawUtterance], condition: MissingCondition) -> list[RawUtterance]:
    return [apply_missing(u, condition) for u in utterances]
