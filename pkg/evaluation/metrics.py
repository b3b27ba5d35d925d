"""Weighted and unweighted accuracy."""

from __future__ import annotations

import numpy as np
from sklearn.metrics import accuracy_score, recall_score

from core.exceptions import InvalidArgumentError


def _check(preds, labels) -> tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds, dtype=np.int64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if preds.shape != labels.shape:
        raise InvalidArgumentError(
            f"predictions ({preds.size}) and labels ({labels.size}) differ in length"
        )
    if labels.size == 0:
        raise InvalidArgumentError("accuracy of an empty prediction set is undefined")
    return preds, labels


def weighted_accuracy(preds, labels) -> float:
    """Fraction of correct predictions over all samples (WA)."""
    preds, labels = _check(preds, labels)
    return float(accuracy_score(labels, preds))


def unweighted_accuracy(preds, labels) -> float:
    """Mean per-class recall over the classes present in ``labels`` (UA)."""
    preds, labels = _check(preds, labels)
    present = np.unique(labels)
    return float(recall_score(labels, preds, labels=present, average="macro", zero_division=0))
