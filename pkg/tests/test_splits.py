"""Tests for the cross-validation partitions."""

import numpy as np
import pytest

from core.exceptions import InvalidArgumentError
from training.splits import kfold_split


def test_parts_are_disjoint_and_cover_everything():
    for split in kfold_split(53, folds=10, seed=1):
        parts = [set(split.train), set(split.val), set(split.test)]
        assert set().union(*parts) == set(range(53))
        assert sum(len(p) for p in parts) == 53


def test_validation_part_is_next_fold_test_part():
    splits = kfold_split(40, folds=5, seed=0)
    for i, split in enumerate(splits):
        np.testing.assert_array_equal(split.val, splits[(i + 1) % 5].test)
        assert split.fold == i


def test_every_item_is_tested_exactly_once():
    splits = kfold_split(37, folds=4, seed=3)
    tested = np.concatenate([s.test for s in splits])
    assert sorted(tested.tolist()) == list(range(37))


def test_folds_equal_to_n_is_leave_one_out():
    splits = kfold_split(6, folds=6, seed=0)
    assert all(len(s.test) == 1 and len(s.val) == 1 and len(s.train) == 4 for s in splits)


def test_same_seed_same_splits():
    a, b = kfold_split(50, seed=7), kfold_split(50, seed=7)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.test, y.test)
        np.testing.assert_array_equal(x.train, y.train)


def test_different_seed_different_splits():
    a, b = kfold_split(50, seed=0), kfold_split(50, seed=1)
    assert any(not np.array_equal(x.test, y.test) for x, y in zip(a, b))


def test_too_few_items():
    with pytest.raises(InvalidArgumentError, match="cannot split"):
        kfold_split(5, folds=10)


def test_too_few_folds():
    with pytest.raises(InvalidArgumentError):
        kfold_split(10, folds=2)
