"""Dense float64 tensors and the tape that records operations on them.

A :class:`Graph` is entered as a context manager; while it is active every
primitive whose inputs require gradients appends a :class:`Node` to it. The
node list is therefore topologically ordered by construction, and
:func:`backward` walks it once in reverse.
"""

from __future__ import annotations

import contextvars
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from core.exceptions import GraphError

_uid_counter = itertools.count(1)
_active_graph: contextvars.ContextVar[Graph | None] = contextvars.ContextVar(
    "ifmmin_active_graph", default=None
)


class Tensor:
    """A float64 array with an identity used by the graph and gradient maps."""

    __slots__ = ("data", "requires_grad", "uid", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.uid = next(_uid_counter)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(()))

    @classmethod
    def zeros(cls, *shape: int, requires_grad: bool = False) -> Tensor:
        return cls(np.zeros(shape), requires_grad=requires_grad)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass
class Node:
    """One recorded operation: its kind, inputs and output."""

    node_id: int
    kind: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    vjp: VJP

    @property
    def input_ids(self) -> tuple[int, ...]:
        return tuple(t.uid for t in self.inputs)


@dataclass
class Graph:
    """Tape of operations recorded while the graph is the active context."""

    nodes: list[Node] = field(default_factory=list)
    _by_output: dict[int, int] = field(default_factory=dict, repr=False)
    _token: contextvars.Token | None = field(default=None, repr=False)

    def __enter__(self) -> Graph:
        self._token = _active_graph.set(self)
        return self

    def __exit__(self, *exc) -> None:
        if self._token is not None:
            _active_graph.reset(self._token)
            self._token = None

    def record(self, kind: str, inputs: Iterable[Tensor], output: Tensor, vjp: VJP) -> Node:
        node = Node(len(self.nodes), kind, tuple(inputs), output, vjp)
        self.nodes.append(node)
        self._by_output[output.uid] = node.node_id
        return node

    def contains(self, tensor: Tensor) -> bool:
        return tensor.uid in self._by_output

    def __len__(self) -> int:
        return len(self.nodes)


def current_graph() -> Graph | None:
    return _active_graph.get()


class GradientMap(dict):
    """Maps tensor uid to the gradient of the loss w.r.t. that tensor."""

    def wrt(self, tensor: Tensor) -> np.ndarray:
        """Gradient for ``tensor``; zeros when the loss does not depend on it."""
        grad = self.get(tensor.uid)
        if grad is None:
            return np.zeros_like(tensor.data)
        return grad.data


def backward(graph: Graph, loss: Tensor) -> GradientMap:
    """Reverse-mode sweep from ``loss`` over ``graph``.

    Returns d loss / d t for every tensor with ``requires_grad`` reached by the
    sweep. Fan-out contributions accumulate additively.
    """
    if loss.data.ndim != 0:
        raise GraphError(f"loss must be a scalar tensor, got shape {loss.shape}")
    if not graph.contains(loss):
        raise GraphError("loss tensor was not produced by this graph")

    last = graph._by_output[loss.uid]
    grads: dict[int, np.ndarray] = {loss.uid: np.ones(())}
    tensors: dict[int, Tensor] = {loss.uid: loss}

    for node in reversed(graph.nodes[: last + 1]):
        upstream = grads.get(node.output.uid)
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.vjp(upstream)):
            if grad is None or not tensor.requires_grad:
                continue
            if tensor.uid in grads:
                grads[tensor.uid] = grads[tensor.uid] + grad
            else:
                grads[tensor.uid] = np.array(grad, dtype=np.float64)
                tensors[tensor.uid] = tensor

    return GradientMap(
        (uid, Tensor(g)) for uid, g in grads.items() if tensors[uid].requires_grad
    )
