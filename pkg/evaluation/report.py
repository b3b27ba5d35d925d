"""Condition-wise evaluation of the student path and full-modality evaluation."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import structlog

from core.exceptions import InvalidArgumentError
from core.interfaces import Predictor
from core.metrics import CONDITION_ACCURACY
from core.models import ALL_CONDITIONS, ConditionReport, ConditionScores, MissingCondition, RawUtterance
from data.dataset import collate, iter_batches
from evaluation.metrics import unweighted_accuracy, weighted_accuracy
from training.conditions import mask_batch

logger = structlog.get_logger(__name__)


def predict_all(
    model: Predictor,
    utterances: Sequence[RawUtterance],
    batch_size: int,
    min_text_length: int,
    condition: MissingCondition | None = None,
) -> np.ndarray:
    """Predicted classes in dataset order, optionally under a missing condition."""
    preds = []
    for chunk in iter_batches(utterances, batch_size):
        if condition is not None:
            chunk = mask_batch(chunk, condition)
        preds.append(model.predict(collate(chunk, min_text_length)))
    return np.concatenate(preds)


def _labels(utterances: Sequence[RawUtterance]) -> np.ndarray:
    return np.array([u.label for u in utterances], dtype=np.int64)


def evaluate_full(
    model: Predictor, utterances: Sequence[RawUtterance], batch_size: int, min_text_length: int
) -> ConditionScores:
    """WA/UA with every modality present."""
    if not utterances:
        raise InvalidArgumentError("cannot evaluate on an empty set")
    preds = predict_all(model, utterances, batch_size, min_text_length)
    labels = _labels(utterances)
    return ConditionScores(weighted_accuracy(preds, labels), unweighted_accuracy(preds, labels))


def evaluate_conditions(
    model: Predictor,
    utterances: Sequence[RawUtterance],
    batch_size: int,
    min_text_length: int,
    conditions: Sequence[MissingCondition] = ALL_CONDITIONS,
    record_metrics: bool = False,
) -> ConditionReport:
    """Masks every utterance per condition and scores the predictions."""
    if not utterances:
        raise InvalidArgumentError("cannot evaluate on an empty test set")
    labels = _labels(utterances)
    scores: dict[str, ConditionScores] = {}
    for condition in conditions:
        preds = predict_all(model, utterances, batch_size, min_text_length, condition)
        scores[condition.tag] = ConditionScores(
            weighted_accuracy(preds, labels), unweighted_accuracy(preds, labels)
        )
        if record_metrics:
            CONDITION_ACCURACY.labels(condition=condition.tag, metric="WA").set(scores[condition.tag].wa)
            CONDITION_ACCURACY.labels(condition=condition.tag, metric="UA").set(scores[condition.tag].ua)
    report = ConditionReport(scores)
    logger.debug("conditions_evaluated", average_wa=report.average_wa, average_ua=report.average_ua)
    return report
