"""Cross-validation partitions: test part i, validation part i + 1, training the rest."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import KFold

from core.exceptions import InvalidArgumentError


@dataclass(frozen=True)
class FoldSplit:
    fold: int
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def kfold_split(n: int, folds: int = 10, seed: int = 0) -> list[FoldSplit]:
    """Deterministic shuffled partition of ``range(n)`` into ``folds`` parts.

    Fold ``i`` tests on part ``i``, validates on part ``(i + 1) % folds`` and
    trains on the remaining parts. ``folds = n`` gives leave-one-out test parts.
    """
    if folds < 3:
        raise InvalidArgumentError(f"need at least 3 folds for train/val/test, got {folds}")
    if n < folds:
        raise InvalidArgumentError(f"cannot split {n} items into {folds} folds")
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    parts = [np.sort(test) for _, test in splitter.split(np.arange(n))]
    result = []
    for i in range(folds):
        val_part = (i + 1) % folds
        train = np.sort(
            np.concatenate([parts[j] for j in range(folds) if j not in (i, val_part)])
        )
        result.append(FoldSplit(fold=i, train=train, val=parts[val_part], test=parts[i]))
    return result
