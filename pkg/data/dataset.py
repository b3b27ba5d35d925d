"""Dataset files (JSON Lines) and padded mini-batches."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import structlog

from config import ModelConfig
from core.exceptions import DatasetError, InvalidArgumentError
from core.models import MODALITY_ORDER, Modality, RawUtterance
from utils.helpers import atomic_write_text

logger = structlog.get_logger(__name__)

_FIELDS = {Modality.ACOUSTIC: "a", Modality.VISUAL: "v", Modality.TEXTUAL: "t"}


def utterance_to_record(u: RawUtterance) -> dict:
    record = {"id": u.uid, "label": int(u.label)}
    for modality, key in _FIELDS.items():
        record[key] = u.frames(modality).tolist()
    return record


def utterance_from_record(record: dict, where: str) -> RawUtterance:
    try:
        frames = {m: np.asarray(record[key], dtype=np.float64) for m, key in _FIELDS.items()}
        return RawUtterance(
            uid=str(record["id"]),
            acoustic=frames[Modality.ACOUSTIC],
            visual=frames[Modality.VISUAL],
            textual=frames[Modality.TEXTUAL],
            label=int(record["label"]),
        )
    except KeyError as e:
        raise DatasetError(f"{where}: missing field {e.args[0]!r}") from e
    except (TypeError, ValueError, InvalidArgumentError) as e:
        raise DatasetError(f"{where}: malformed utterance ({e})") from e


def write_jsonl(utterances: Iterable[RawUtterance], path: Path | str) -> Path:
    lines = [json.dumps(utterance_to_record(u), separators=(",", ":")) for u in utterances]
    out = atomic_write_text(path, "\n".join(lines) + "\n")
    logger.info("dataset_written", path=str(out), utterances=len(lines))
    return out


def read_jsonl(path: Path | str) -> list[RawUtterance]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    utterances: list[RawUtterance] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{where}: invalid JSON ({e.msg})") from e
            utterances.append(utterance_from_record(record, where))
    if not utterances:
        raise DatasetError(f"dataset file is empty: {path}")
    return utterances


def check_dimensions(utterances: Sequence[RawUtterance], cfg: ModelConfig) -> None:
    """Fails fast when stored feature widths disagree with the model config."""
    expected = {
        Modality.ACOUSTIC: cfg.acoustic_dim,
        Modality.VISUAL: cfg.visual_dim,
        Modality.TEXTUAL: cfg.text_dim,
    }
    for u in utterances:
        for modality, width in expected.items():
            got = u.frames(modality).shape[1]
            if got != width:
                raise DatasetError(
                    f"utterance {u.uid}: {_FIELDS[modality]} frames have width {got}, "
                    f"config expects {width}"
                )
        if not 0 <= u.label < cfg.n_classes:
            raise DatasetError(f"utterance {u.uid}: label {u.label} outside [0, {cfg.n_classes})")


@dataclass
class Batch:
    """Zero-padded frames per modality with the true lengths of each row."""

    utterances: list[RawUtterance]
    labels: np.ndarray
    acoustic: np.ndarray
    visual: np.ndarray
    textual: np.ndarray
    lengths_a: np.ndarray
    lengths_v: np.ndarray
    lengths_t: np.ndarray

    def __len__(self) -> int:
        return len(self.utterances)

    def frames(self, modality: Modality) -> tuple[np.ndarray, np.ndarray]:
        return {
            Modality.ACOUSTIC: (self.acoustic, self.lengths_a),
            Modality.VISUAL: (self.visual, self.lengths_v),
            Modality.TEXTUAL: (self.textual, self.lengths_t),
        }[modality]


def _pad(sequences: list[np.ndarray], min_steps: int = 1) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([s.shape[0] for s in sequences], dtype=np.int64)
    steps = max(int(lengths.max()), min_steps)
    out = np.zeros((len(sequences), steps, sequences[0].shape[1]), dtype=np.float64)
    for row, seq in enumerate(sequences):
        out[row, : seq.shape[0]] = seq
    return out, lengths


def collate(utterances: Sequence[RawUtterance], min_text_length: int = 1) -> Batch:
    """Pads every modality to the longest row; text to at least ``min_text_length``."""
    if not utterances:
        raise DatasetError("cannot build a batch from zero utterances")
    utterances = list(utterances)
    padded = {}
    for modality in MODALITY_ORDER:
        min_steps = min_text_length if modality is Modality.TEXTUAL else 1
        padded[modality] = _pad([u.frames(modality) for u in utterances], min_steps)
    return Batch(
        utterances=utterances,
        labels=np.array([u.label for u in utterances], dtype=np.int64),
        acoustic=padded[Modality.ACOUSTIC][0],
        visual=padded[Modality.VISUAL][0],
        textual=padded[Modality.TEXTUAL][0],
        lengths_a=padded[Modality.ACOUSTIC][1],
        lengths_v=padded[Modality.VISUAL][1],
        lengths_t=padded[Modality.TEXTUAL][1],
    )


def batch_slices(n: int, batch_size: int) -> list[slice]:
    """Consecutive slices of ``batch_size``; a trailing singleton joins the previous slice."""
    if batch_size < 1:
        raise InvalidArgumentError("batch_size must be >= 1")
    starts = list(range(0, n, batch_size))
    slices = [slice(s, min(s + batch_size, n)) for s in starts]
    if len(slices) > 1 and slices[-1].stop - slices[-1].start == 1:
        tail = slices.pop()
        slices[-1] = slice(slices[-1].start, tail.stop)
    return slices


def iter_batches(
    utterances: Sequence[RawUtterance],
    batch_size: int,
    rng: np.random.Generator | None = None,
) -> Iterator[list[RawUtterance]]:
    """Yields mini-batches, shuffled when ``rng`` is given."""
    order = np.arange(len(utterances))
    if rng is not None:
        order = rng.permutation(len(utterances))
    for part in batch_slices(len(utterances), batch_size):
        yield [utterances[i] for i in order[part]]
