"""Fully-connected building block shared by the encoders, IF-IM and classifier."""

from __future__ import annotations

import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from core.exceptions import ShapeError
from model.params import ParameterSet


class Linear:
    """y = x W + b for a batch x of shape N x in_dim."""

    def __init__(
        self, params: ParameterSet, prefix: str, in_dim: int, out_dim: int, rng: np.random.Generator
    ):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.params = params
        self._w = f"{prefix}.weight"
        self._b = f"{prefix}.bias"
        params.create(self._w, (in_dim, out_dim), rng, fan_in=in_dim)
        params.create(self._b, (out_dim,), rng, fan_in=in_dim)

    @property
    def weight(self) -> Tensor:
        return self.params[self._w]

    @property
    def bias(self) -> Tensor:
        return self.params[self._b]

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError("linear", x.shape, (x.shape[0] if x.ndim else 0, self.in_dim))
        return ops.add(ops.matmul(x, self.weight), ops.broadcast_rows(self.bias, x.shape[0]))
