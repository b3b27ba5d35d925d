"""Adam optimizer and the constant-then-linear-decay learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from autograd.tensor import GradientMap, Tensor
from core.exceptions import FrozenParameterError, InvalidArgumentError, ShapeError
from model.params import ParameterSet


def lr_schedule(epoch: int, initial_lr: float, total_epochs: int = 40, constant_epochs: int = 20) -> float:
    """Learning rate for a 1-based ``epoch``.

    Constant for the first ``constant_epochs``, then decays linearly to 0 at
    ``total_epochs``.
    """
    if not 1 <= epoch <= total_epochs:
        raise InvalidArgumentError(f"epoch {epoch} outside [1, {total_epochs}]")
    if epoch <= constant_epochs:
        return initial_lr
    decay_epochs = total_epochs - constant_epochs
    return initial_lr * (total_epochs - epoch) / decay_epochs


@dataclass
class AdamState:
    """First and second moment accumulators keyed by parameter name."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """One bias-corrected Adam update, in place on ``params``.

    Names absent from ``grads`` are left untouched. A gradient for a tensor
    with ``requires_grad`` off raises :class:`FrozenParameterError`.
    """
    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for name, grad in grads.items():
        tensor = params[name]
        if not tensor.requires_grad:
            raise FrozenParameterError(f"refusing to update frozen parameter {name}")
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != tensor.shape:
            raise ShapeError("adam_step", tensor.shape, grad.shape, detail=name)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        tensor.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return state


class Adam:
    """Adam over the trainable parameter sets of a network."""

    def __init__(
        self,
        sets: Iterable[ParameterSet],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params: dict[str, Tensor] = {
            name: tensor for params in sets if not params.frozen for name, tensor in params.named_parameters()
        }
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.state = AdamState()

    def tensors(self) -> list[Tensor]:
        return list(self.params.values())

    def step(self, gradients: GradientMap, lr: float) -> None:
        grads = {name: gradients.wrt(tensor) for name, tensor in self.params.items()}
        adam_step(self.params, grads, self.state, lr, self.beta1, self.beta2, self.eps)
