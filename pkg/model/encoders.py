"""Specificity encoders, the invariance encoder Enc' and the classifier.

All encoders work on padded batches: ``x`` is ``N x T x D`` and ``lengths``
holds the number of real frames per row. Padded steps never reach the
max-pooling.
"""

from __future__ import annotations

import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from core.exceptions import InvalidArgumentError, ShapeError
from core.models import MODALITY_ORDER, Modality
from model.layers import Linear
from model.params import ParameterSet


def _check_sequence_batch(kind: str, x: Tensor, lengths: np.ndarray, width: int) -> np.ndarray:
    if x.ndim != 3 or x.shape[2] != width:
        raise ShapeError(kind, x.shape, (x.shape[0] if x.ndim else 0, -1, width))
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.shape != (x.shape[0],):
        raise ShapeError(kind, x.shape, lengths.shape, detail="one length per row")
    if x.shape[1] < 1 or np.any(lengths < 1):
        raise InvalidArgumentError(f"{kind}: empty sequence")
    if np.any(lengths > x.shape[1]):
        raise ShapeError(kind, x.shape, detail="length exceeds padded time axis")
    return lengths


def time_mask(lengths: np.ndarray, steps: int) -> np.ndarray:
    """Boolean N x steps mask, true where a step is within the row's length."""
    return np.arange(steps)[None, :] < np.asarray(lengths)[:, None]


class LSTMEncoder:
    """Single-layer unidirectional LSTM followed by max-pooling over time.

    Gate layout in the fused weights is (input, forget, cell, output).
    """

    def __init__(
        self,
        name: str,
        input_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        forget_bias: float = 1.0,
    ):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.params = ParameterSet(name)
        self.params.create("w_ih", (input_dim, 4 * hidden_dim), rng, fan_in=input_dim)
        self.params.create("w_hh", (hidden_dim, 4 * hidden_dim), rng, fan_in=hidden_dim)
        bias = self.params.create("bias", (4 * hidden_dim,), rng, fan_in=hidden_dim)
        bias.data[hidden_dim : 2 * hidden_dim] = forget_bias

    def parameter_sets(self) -> list[ParameterSet]:
        return [self.params]

    def __call__(self, x: Tensor, lengths: np.ndarray) -> Tensor:
        lengths = _check_sequence_batch("lstm_encoder", x, lengths, self.input_dim)
        n, steps, _ = x.shape
        hd = self.hidden_dim
        w_ih, w_hh, bias = self.params["w_ih"], self.params["w_hh"], self.params["bias"]

        projected = ops.reshape(
            ops.matmul(ops.reshape(x, (n * steps, self.input_dim)), w_ih), (n, steps, 4 * hd)
        )
        bias_rows = ops.broadcast_rows(bias, n)
        h = Tensor.zeros(n, hd)
        c = Tensor.zeros(n, hd)
        hidden_states = []
        for t in range(steps):
            gates = ops.add(ops.add(ops.select_time(projected, t), ops.matmul(h, w_hh)), bias_rows)
            i = ops.sigmoid(ops.slice_cols(gates, 0, hd))
            f = ops.sigmoid(ops.slice_cols(gates, hd, 2 * hd))
            g = ops.tanh(ops.slice_cols(gates, 2 * hd, 3 * hd))
            o = ops.sigmoid(ops.slice_cols(gates, 3 * hd, 4 * hd))
            c = ops.add(ops.mul(f, c), ops.mul(i, g))
            h = ops.mul(o, ops.tanh(c))
            hidden_states.append(h)

        return ops.max_time(ops.stack_time(hidden_states), time_mask(lengths, steps))


class TextCNNEncoder:
    """Parallel convolution banks, ReLU, max over valid positions, projection."""

    def __init__(
        self,
        name: str,
        input_dim: int,
        filters: int,
        kernel_sizes: tuple[int, ...],
        out_dim: int,
        rng: np.random.Generator,
    ):
        self.input_dim = input_dim
        self.kernel_sizes = tuple(kernel_sizes)
        self.min_length = max(self.kernel_sizes)
        self.params = ParameterSet(name)
        for k in self.kernel_sizes:
            self.params.create(f"conv{k}.weight", (k, input_dim, filters), rng, fan_in=k * input_dim)
            self.params.create(f"conv{k}.bias", (filters,), rng, fan_in=k * input_dim)
        self.proj = Linear(self.params, "proj", filters * len(self.kernel_sizes), out_dim, rng)

    def parameter_sets(self) -> list[ParameterSet]:
        return [self.params]

    def __call__(self, x: Tensor, lengths: np.ndarray) -> Tensor:
        lengths = _check_sequence_batch("textcnn_encoder", x, lengths, self.input_dim)
        if x.shape[1] < self.min_length:
            if x.requires_grad:
                raise ShapeError(
                    "textcnn_encoder", x.shape, detail=f"pad the time axis to {self.min_length}"
                )
            pad = self.min_length - x.shape[1]
            x = Tensor(np.pad(x.data, ((0, 0), (0, pad), (0, 0))))

        steps = x.shape[1]
        effective = np.maximum(lengths, self.min_length)
        pooled = []
        for k in self.kernel_sizes:
            conv = ops.relu(
                ops.conv1d_time(x, self.params[f"conv{k}.weight"], self.params[f"conv{k}.bias"])
            )
            positions = steps - k + 1
            pooled.append(ops.max_time(conv, time_mask(effective - k + 1, positions)))
        return self.proj(ops.concat(*pooled))


class InvarianceEncoder:
    """Enc': fully-connected layer, ReLU and dropout applied per modality.

    With ``shared=True`` one layer serves all three modalities; otherwise each
    modality gets its own branch.
    """

    def __init__(
        self,
        name: str,
        in_dim: int,
        out_dim: int,
        dropout: float,
        rng: np.random.Generator,
        shared: bool = True,
    ):
        self.shared = shared
        self.dropout = dropout
        self.params = ParameterSet(name)
        if shared:
            layer = Linear(self.params, "fc", in_dim, out_dim, rng)
            self.layers = {m: layer for m in MODALITY_ORDER}
        else:
            self.layers = {
                m: Linear(self.params, f"fc_{m.value}", in_dim, out_dim, rng) for m in MODALITY_ORDER
            }

    def parameter_sets(self) -> list[ParameterSet]:
        return [self.params]

    def project(self, h_m: Tensor, modality: Modality = Modality.ACOUSTIC) -> Tensor:
        """FC and ReLU only: the feature before dropout."""
        return ops.relu(self.layers[modality](h_m))

    def __call__(
        self,
        h_m: Tensor,
        modality: Modality = Modality.ACOUSTIC,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        return ops.dropout(self.project(h_m, modality), self.dropout, train, rng)


class Classifier:
    """FC -> ReLU -> dropout -> FC -> ReLU -> dropout -> FC, returning logits."""

    def __init__(
        self,
        name: str,
        in_dim: int,
        hidden_dim: int,
        n_classes: int,
        dropout: float,
        rng: np.random.Generator,
    ):
        self.in_dim = in_dim
        self.dropout = dropout
        self.params = ParameterSet(name)
        self.fc1 = Linear(self.params, "fc1", in_dim, hidden_dim, rng)
        self.fc2 = Linear(self.params, "fc2", hidden_dim, hidden_dim, rng)
        self.fc3 = Linear(self.params, "fc3", hidden_dim, n_classes, rng)

    def parameter_sets(self) -> list[ParameterSet]:
        return [self.params]

    def __call__(
        self, z: Tensor, train: bool = False, rng: np.random.Generator | None = None
    ) -> Tensor:
        if z.ndim != 2 or z.shape[1] != self.in_dim:
            raise ShapeError("classifier", z.shape, (z.shape[0] if z.ndim else 0, self.in_dim))
        hidden = ops.dropout(ops.relu(self.fc1(z)), self.dropout, train, rng)
        hidden = ops.dropout(ops.relu(self.fc2(hidden)), self.dropout, train, rng)
        return self.fc3(hidden)
