"""Named parameter tensors with a freeze switch."""

from __future__ import annotations

import hashlib
import math
from typing import Iterable, Iterator, Mapping

import numpy as np

from autograd.tensor import Tensor
from core.exceptions import CheckpointError, InvalidArgumentError


class ParameterSet:
    """Parameters of one block (an encoder, a layer stack, a classifier).

    A frozen set keeps ``requires_grad`` off on every tensor, so no graph
    records gradients for it and the optimizer skips it.
    """

    def __init__(self, name: str):
        self.name = name
        self.frozen = False
        self._tensors: dict[str, Tensor] = {}

    def create(
        self, key: str, shape: tuple[int, ...], rng: np.random.Generator, fan_in: int
    ) -> Tensor:
        """Registers a tensor drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
        if fan_in < 1:
            raise InvalidArgumentError(f"{self.name}.{key}: fan_in must be >= 1")
        bound = 1.0 / math.sqrt(fan_in)
        return self.register(key, rng.uniform(-bound, bound, size=shape))

    def register(self, key: str, values: np.ndarray) -> Tensor:
        if key in self._tensors:
            raise InvalidArgumentError(f"{self.name}.{key} already registered")
        tensor = Tensor(values, requires_grad=not self.frozen, name=f"{self.name}.{key}")
        self._tensors[key] = tensor
        return tensor

    def __getitem__(self, key: str) -> Tensor:
        return self._tensors[key]

    def __contains__(self, key: str) -> bool:
        return key in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def tensors(self) -> list[Tensor]:
        return list(self._tensors.values())

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        for key, tensor in self._tensors.items():
            yield f"{self.name}.{key}", tensor

    def swap(self, key: str, tensor: Tensor) -> Tensor:
        """Puts ``tensor`` in place of ``key`` and returns the previous tensor."""
        previous = self._tensors[key]
        if tensor.shape != previous.shape:
            raise InvalidArgumentError(f"{self.name}.{key}: shape {tensor.shape} != {previous.shape}")
        self._tensors[key] = tensor
        return previous

    def freeze(self) -> ParameterSet:
        self.frozen = True
        for tensor in self._tensors.values():
            tensor.requires_grad = False
        return self

    def unfreeze(self) -> ParameterSet:
        self.frozen = False
        for tensor in self._tensors.values():
            tensor.requires_grad = True
        return self

    def fill_(self, value: float) -> ParameterSet:
        for tensor in self._tensors.values():
            tensor.data[...] = value
        return self

    def state(self) -> dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.named_parameters()}

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        """Copies values in place; every parameter of this set must be present."""
        for name, tensor in self.named_parameters():
            if name not in state:
                raise CheckpointError(f"parameter {name} missing from checkpoint")
            values = np.asarray(state[name], dtype=np.float64)
            if values.shape != tensor.shape:
                raise CheckpointError(
                    f"parameter {name}: checkpoint shape {values.shape} != model shape {tensor.shape}"
                )
            tensor.data[...] = values

    def copy(self, name: str | None = None) -> ParameterSet:
        """Deep copy with fresh tensor identities, unfrozen."""
        clone = ParameterSet(name or self.name)
        for key, tensor in self._tensors.items():
            clone.register(key, tensor.data.copy())
        return clone

    def assign_from(self, other: ParameterSet) -> None:
        """Copies values key by key from a set with the same layout."""
        if set(self._tensors) != set(other._tensors):
            raise InvalidArgumentError(f"cannot copy {other.name} into {self.name}: layouts differ")
        for key, tensor in self._tensors.items():
            source = other[key]
            if source.shape != tensor.shape:
                raise InvalidArgumentError(f"{self.name}.{key}: shape {source.shape} != {tensor.shape}")
            tensor.data[...] = source.data

    def fingerprint(self) -> str:
        digest = hashlib.sha256(self.name.encode())
        for key, tensor in self._tensors.items():
            digest.update(key.encode())
            digest.update(np.ascontiguousarray(tensor.data).tobytes())
        return digest.hexdigest()


def collect_state(sets: Iterable[ParameterSet]) -> dict[str, np.ndarray]:
    state: dict[str, np.ndarray] = {}
    for params in sets:
        state.update(params.state())
    return state


def load_collected_state(sets: Iterable[ParameterSet], state: Mapping[str, np.ndarray]) -> None:
    for params in sets:
        params.load_state(state)


def fingerprint_sets(sets: Iterable[ParameterSet]) -> str:
    digest = hashlib.sha256()
    for params in sets:
        digest.update(params.fingerprint().encode())
    return digest.hexdigest()
