"""Cascaded residual autoencoders with the invariant feature fed to every stage."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from core.exceptions import InvalidArgumentError, ShapeError
from core.models import ImaginationOutput
from model.layers import Linear
from model.params import ParameterSet


class Autoencoder:
    """One stage of the cascade.

    The encoder narrows ``input_dim`` through ``hidden_layers`` down to the
    bottleneck; the decoder mirrors it back. ReLU follows every layer except
    the last decoder layer, which stays linear.
    """

    def __init__(
        self,
        params: ParameterSet,
        prefix: str,
        input_dim: int,
        hidden_layers: Sequence[int],
        rng: np.random.Generator,
    ):
        if not hidden_layers:
            raise InvalidArgumentError("autoencoder needs at least one hidden layer")
        self.input_dim = input_dim
        widths = [input_dim, *hidden_layers]
        self.encoder = [
            Linear(params, f"{prefix}.enc{i}", widths[i], widths[i + 1], rng)
            for i in range(len(widths) - 1)
        ]
        back = widths[::-1]
        self.decoder = [
            Linear(params, f"{prefix}.dec{i}", back[i], back[i + 1], rng)
            for i in range(len(back) - 1)
        ]

    @property
    def bottleneck_dim(self) -> int:
        return self.encoder[-1].out_dim

    def __call__(self, z: Tensor) -> tuple[Tensor, Tensor]:
        """Returns ``(delta, hidden)`` for a batch ``z`` of width ``input_dim``."""
        if z.ndim != 2 or z.shape[1] != self.input_dim:
            raise ShapeError("autoencoder", z.shape, (z.shape[0] if z.ndim else 0, self.input_dim))
        hidden = z
        for layer in self.encoder:
            hidden = ops.relu(layer(hidden))
        out = hidden
        for layer in self.decoder[:-1]:
            out = ops.relu(layer(out))
        return self.decoder[-1](out), hidden


def ae_forward(z: Tensor, autoencoder: Autoencoder) -> tuple[Tensor, Tensor]:
    return autoencoder(z)


class ImaginationModule:
    """M autoencoders chained on (H' + h), then (H' + previous delta)."""

    def __init__(
        self,
        name: str,
        num_autoencoders: int,
        input_dim: int,
        hidden_layers: Sequence[int],
        rng: np.random.Generator,
    ):
        if num_autoencoders < 1:
            raise InvalidArgumentError(f"imagination module needs M >= 1, got {num_autoencoders}")
        self.input_dim = input_dim
        self.params = ParameterSet(name)
        self.autoencoders = [
            Autoencoder(self.params, f"ae{i}", input_dim, hidden_layers, rng)
            for i in range(num_autoencoders)
        ]

    @property
    def joint_dim(self) -> int:
        return sum(ae.bottleneck_dim for ae in self.autoencoders)

    def parameter_sets(self) -> list[ParameterSet]:
        return [self.params]

    def __call__(self, h: Tensor, H_prime: Tensor, cascaded_input: bool = True) -> ImaginationOutput:
        return ifim_forward(h, H_prime, self.autoencoders, cascaded_input)


def ifim_forward(
    h: Tensor,
    H_prime: Tensor,
    autoencoders: Sequence[Autoencoder],
    cascaded_input: bool = True,
) -> ImaginationOutput:
    """Runs the cascade.

    Stage 1 always consumes ``H' + h``. Later stages consume ``H' + delta``
    when ``cascaded_input`` is set and the bare previous delta otherwise.
    The imagined feature is the last delta; ``C`` concatenates the
    bottleneck activations in cascade order.
    """
    if not autoencoders:
        raise InvalidArgumentError("imagination cascade needs M >= 1 autoencoders")
    if h.shape != H_prime.shape:
        raise ShapeError("ifim_forward", h.shape, H_prime.shape)

    deltas: list[Tensor] = []
    hidden_states: list[Tensor] = []
    z = ops.add(H_prime, h)
    for i, autoencoder in enumerate(autoencoders):
        if i > 0:
            z = ops.add(H_prime, deltas[-1]) if cascaded_input else deltas[-1]
        delta, hidden = autoencoder(z)
        deltas.append(delta)
        hidden_states.append(hidden)

    joint = hidden_states[0] if len(hidden_states) == 1 else ops.concat(*hidden_states)
    return ImaginationOutput(h_prime=deltas[-1], hidden_states=hidden_states, C=joint, deltas=deltas)
