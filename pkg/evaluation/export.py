"""CSV export of predicted invariant features H' per missing condition."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import numpy as np
import structlog

from core.models import ALL_CONDITIONS, MissingCondition, RawUtterance
from data.dataset import collate, iter_batches
from model.network import IFMMINNetwork
from training.conditions import mask_batch
from utils.helpers import atomic_write_text

logger = structlog.get_logger(__name__)


def export_invariant_features(
    net: IFMMINNetwork,
    utterances: Sequence[RawUtterance],
    conditions: Sequence[MissingCondition] = ALL_CONDITIONS,
    per_condition: int = 100,
    batch_size: int = 128,
) -> list[tuple[str, np.ndarray]]:
    """Rows of ``(condition tag, H')`` for the first ``per_condition`` utterances."""
    chosen = list(utterances[:per_condition])
    rows: list[tuple[str, np.ndarray]] = []
    for condition in conditions:
        for chunk in iter_batches(chosen, batch_size):
            batch = collate(mask_batch(chunk, condition), net.cfg.min_text_length)
            for vector in net.invariant_features(batch):
                rows.append((condition.tag, vector))
    return rows


def features_to_csv(rows: Sequence[tuple[str, np.ndarray]]) -> str:
    width = len(rows[0][1]) if rows else 0
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["condition", *(f"H_{i}" for i in range(width))])
    for tag, vector in rows:
        writer.writerow([tag, *(repr(float(v)) for v in vector)])
    return buffer.getvalue()


def write_features_csv(rows: Sequence[tuple[str, np.ndarray]], path: Path | str) -> Path:
    out = atomic_write_text(path, features_to_csv(rows))
    logger.info("features_exported", path=str(out), rows=len(rows))
    return out
