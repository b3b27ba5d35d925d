"""Common interfaces (Protocols) shared by training, evaluation and storage.

They let the evaluation and checkpoint code depend on what a network can do
rather than on the concrete pretraining or IF-MMIN classes.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Protocol

import numpy as np

if TYPE_CHECKING:  # Avoid import cycles
    from data.dataset import Batch
    from model.params import ParameterSet


class ParameterModule(Protocol):
    """Anything that owns named parameter sets."""

    def parameter_sets(self) -> list[ParameterSet]:
        """Parameter sets in a stable order."""
        ...


class Predictor(Protocol):
    """A network that maps a padded batch to class predictions."""

    def predict(self, batch: Batch) -> np.ndarray:
        """Argmax class per row, dropout disabled."""
        ...
