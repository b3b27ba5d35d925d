"""Primitive registry and functional wrappers.

Shapes must match exactly; there is no implicit broadcasting. Alignment that
other libraries do silently (bias rows, batch means) goes through explicit
primitives such as ``broadcast_rows`` so that every shape change is visible in
the graph.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autograd.tensor import Tensor, current_graph
from core.exceptions import (
    InvalidArgumentError,
    NumericalError,
    ShapeError,
    UnknownPrimitiveError,
)

Shape = tuple[int, ...]
Grads = list[np.ndarray | None]


class Primitive:
    """Forward rule, shape rule and vector-Jacobian product for one kind."""

    kind: str = ""
    arity: int | None = None  # None means one or more inputs

    def check(self, shapes: list[Shape], attrs: dict[str, Any]) -> None:
        pass

    def forward(self, xs: list[np.ndarray], attrs: dict[str, Any]) -> tuple[np.ndarray | None, Any]:
        raise NotImplementedError

    def backward(
        self, g: np.ndarray, xs: list[np.ndarray], out: np.ndarray, ctx: Any, attrs: dict[str, Any]
    ) -> Grads:
        raise NotImplementedError


_REGISTRY: dict[str, Primitive] = {}


def register(cls: type[Primitive]) -> type[Primitive]:
    _REGISTRY[cls.kind] = cls()
    return cls


def registered_kinds() -> list[str]:
    return sorted(_REGISTRY)


def forward_primitive(kind: str, inputs: Sequence[Tensor], **attrs: Any) -> Tensor:
    """Evaluates one primitive and records it on the active graph.

    The operation is recorded only when a graph is active and at least one
    input requires gradients.
    """
    prim = _REGISTRY.get(kind)
    if prim is None:
        raise UnknownPrimitiveError(f"unknown primitive kind {kind!r}")
    inputs = tuple(inputs)
    if not inputs:
        raise ShapeError(kind, detail="no inputs")
    if prim.arity is not None and len(inputs) != prim.arity:
        raise ShapeError(
            kind, *(t.shape for t in inputs), detail=f"expects {prim.arity} inputs"
        )

    prim.check([t.shape for t in inputs], attrs)
    xs = [t.data for t in inputs]
    out_data, ctx = prim.forward(xs, attrs)
    if out_data is None:  # identity (dropout in eval mode)
        return inputs[0]

    out = Tensor(out_data)
    graph = current_graph()
    if graph is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        graph.record(
            kind, inputs, out, lambda g: prim.backward(g, xs, out_data, ctx, attrs)
        )
    return out


def _same_shapes(kind: str, shapes: list[Shape]) -> None:
    first = shapes[0]
    for other in shapes[1:]:
        if other != first:
            raise ShapeError(kind, first, other)


# --------------------------------------------------------------------------
# Linear algebra and elementwise arithmetic
# --------------------------------------------------------------------------


@register
class MatMul(Primitive):
    kind = "matmul"
    arity = 2

    def check(self, shapes, attrs):
        a, b = shapes
        if len(a) != 2 or len(b) != 2 or a[1] != b[0]:
            raise ShapeError(self.kind, a, b)

    def forward(self, xs, attrs):
        return xs[0] @ xs[1], None

    def backward(self, g, xs, out, ctx, attrs):
        a, b = xs
        return [g @ b.T, a.T @ g]


@register
class Add(Primitive):
    kind = "add"
    arity = 2

    def check(self, shapes, attrs):
        _same_shapes(self.kind, shapes)

    def forward(self, xs, attrs):
        return xs[0] + xs[1], None

    def backward(self, g, xs, out, ctx, attrs):
        return [g, g]


@register
class Sub(Add):
    kind = "sub"

    def forward(self, xs, attrs):
        return xs[0] - xs[1], None

    def backward(self, g, xs, out, ctx, attrs):
        return [g, -g]


@register
class Mul(Add):
    kind = "mul"

    def forward(self, xs, attrs):
        return xs[0] * xs[1], None

    def backward(self, g, xs, out, ctx, attrs):
        return [g * xs[1], g * xs[0]]


@register
class Scale(Primitive):
    kind = "scale"
    arity = 1

    def forward(self, xs, attrs):
        return xs[0] * float(attrs["factor"]), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g * float(attrs["factor"])]


@register
class Power(Primitive):
    kind = "power"
    arity = 1

    def check(self, shapes, attrs):
        exponent = attrs.get("exponent")
        if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)) or exponent < 0:
            raise InvalidArgumentError(f"power: exponent must be a non-negative integer, got {exponent!r}")

    def forward(self, xs, attrs):
        return xs[0] ** int(attrs["exponent"]), None

    def backward(self, g, xs, out, ctx, attrs):
        p = int(attrs["exponent"])
        if p == 0:
            return [np.zeros_like(xs[0])]
        return [g * p * xs[0] ** (p - 1)]


@register
class Sqrt(Primitive):
    kind = "sqrt"
    arity = 1

    def forward(self, xs, attrs):
        if np.any(xs[0] < 0):
            raise NumericalError("sqrt: negative input")
        return np.sqrt(xs[0]), None

    def backward(self, g, xs, out, ctx, attrs):
        # zero subgradient at 0 keeps norms of equal inputs differentiable
        safe = np.where(out > 0, out, 1.0)
        return [np.where(out > 0, g / (2.0 * safe), 0.0)]


# --------------------------------------------------------------------------
# Activations
# --------------------------------------------------------------------------


@register
class Sigmoid(Primitive):
    kind = "sigmoid"
    arity = 1

    def forward(self, xs, attrs):
        return 0.5 * (1.0 + np.tanh(0.5 * xs[0])), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g * out * (1.0 - out)]


@register
class Tanh(Primitive):
    kind = "tanh"
    arity = 1

    def forward(self, xs, attrs):
        return np.tanh(xs[0]), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g * (1.0 - out * out)]


@register
class ReLU(Primitive):
    kind = "relu"
    arity = 1

    def forward(self, xs, attrs):
        return np.maximum(xs[0], 0.0), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g * (xs[0] > 0)]


@register
class Dropout(Primitive):
    """Inverted dropout: kept units are scaled by 1/(1-rate) at train time."""

    kind = "dropout"
    arity = 1

    def check(self, shapes, attrs):
        rate = attrs.get("rate", 0.0)
        if not 0.0 <= rate < 1.0:
            raise InvalidArgumentError(f"dropout: rate must be in [0, 1), got {rate}")
        if attrs.get("train") and rate > 0.0 and attrs.get("rng") is None:
            raise InvalidArgumentError("dropout: train mode needs a random generator")

    def forward(self, xs, attrs):
        rate = float(attrs.get("rate", 0.0))
        if not attrs.get("train") or rate == 0.0:
            return None, None
        keep = attrs["rng"].random(xs[0].shape) >= rate
        mask = keep / (1.0 - rate)
        return xs[0] * mask, mask

    def backward(self, g, xs, out, ctx, attrs):
        return [g * ctx]


# --------------------------------------------------------------------------
# Shape manipulation
# --------------------------------------------------------------------------


@register
class Concat(Primitive):
    """Concatenation along the last (feature) axis."""

    kind = "concat"

    def check(self, shapes, attrs):
        first = shapes[0]
        for other in shapes[1:]:
            if len(other) != len(first) or other[:-1] != first[:-1]:
                raise ShapeError(self.kind, first, other)

    def forward(self, xs, attrs):
        return np.concatenate(xs, axis=-1), [x.shape[-1] for x in xs]

    def backward(self, g, xs, out, ctx, attrs):
        cuts = np.cumsum(ctx)[:-1]
        return list(np.split(g, cuts, axis=-1))


@register
class SliceCols(Primitive):
    kind = "slice_cols"
    arity = 1

    def check(self, shapes, attrs):
        (shape,) = shapes
        start, stop = attrs["start"], attrs["stop"]
        if not shape or not 0 <= start < stop <= shape[-1]:
            raise ShapeError(self.kind, shape, detail=f"columns [{start}, {stop})")

    def forward(self, xs, attrs):
        return xs[0][..., attrs["start"] : attrs["stop"]].copy(), None

    def backward(self, g, xs, out, ctx, attrs):
        grad = np.zeros_like(xs[0])
        grad[..., attrs["start"] : attrs["stop"]] = g
        return [grad]


@register
class BroadcastRows(Primitive):
    """Repeats a d-vector into an N x d matrix."""

    kind = "broadcast_rows"
    arity = 1

    def check(self, shapes, attrs):
        (shape,) = shapes
        if len(shape) != 1 or int(attrs["rows"]) < 1:
            raise ShapeError(self.kind, shape, detail=f"rows={attrs['rows']}")

    def forward(self, xs, attrs):
        return np.tile(xs[0], (int(attrs["rows"]), 1)), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g.sum(axis=0)]


@register
class Reshape(Primitive):
    kind = "reshape"
    arity = 1

    def check(self, shapes, attrs):
        (shape,) = shapes
        target = tuple(attrs["shape"])
        if int(np.prod(shape)) != int(np.prod(target)):
            raise ShapeError(self.kind, shape, target)

    def forward(self, xs, attrs):
        return xs[0].reshape(tuple(attrs["shape"])).copy(), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g.reshape(xs[0].shape)]


@register
class SelectTime(Primitive):
    kind = "select_time"
    arity = 1

    def check(self, shapes, attrs):
        (shape,) = shapes
        if len(shape) != 3 or not 0 <= attrs["t"] < shape[1]:
            raise ShapeError(self.kind, shape, detail=f"t={attrs['t']}")

    def forward(self, xs, attrs):
        return xs[0][:, attrs["t"], :].copy(), None

    def backward(self, g, xs, out, ctx, attrs):
        grad = np.zeros_like(xs[0])
        grad[:, attrs["t"], :] = g
        return [grad]


@register
class StackTime(Primitive):
    """Stacks T matrices of shape N x d into N x T x d."""

    kind = "stack_time"

    def check(self, shapes, attrs):
        _same_shapes(self.kind, shapes)
        if len(shapes[0]) != 2:
            raise ShapeError(self.kind, shapes[0], detail="expects N x d steps")

    def forward(self, xs, attrs):
        return np.stack(xs, axis=1), None

    def backward(self, g, xs, out, ctx, attrs):
        return [g[:, i, :] for i in range(g.shape[1])]


# --------------------------------------------------------------------------
# Sequence operators
# --------------------------------------------------------------------------


@register
class MaxTime(Primitive):
    """Elementwise max over the time axis of N x T x d, restricted to a mask."""

    kind = "max_time"
    arity = 1

    def check(self, shapes, attrs):
        (shape,) = shapes
        if len(shape) != 3 or shape[1] < 1:
            raise ShapeError(self.kind, shape, detail="expects N x T x d with T >= 1")
        mask = attrs.get("mask")
        if mask is not None:
            mask = np.asarray(mask)
            if mask.shape != shape[:2]:
                raise ShapeError(self.kind, shape, mask.shape, detail="mask must be N x T")
            if not np.all(mask.any(axis=1)):
                raise ShapeError(self.kind, shape, detail="a row has no valid time step")

    def forward(self, xs, attrs):
        x = xs[0]
        mask = attrs.get("mask")
        if mask is not None:
            x = np.where(np.asarray(mask, dtype=bool)[:, :, None], x, -np.inf)
        idx = np.argmax(x, axis=1)
        return np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0, :], idx

    def backward(self, g, xs, out, ctx, attrs):
        grad = np.zeros_like(xs[0])
        np.put_along_axis(grad, ctx[:, None, :], g[:, None, :], axis=1)
        return [grad]


@register
class Conv1dTime(Primitive):
    """Valid 1-D convolution over time: (N,T,Cin) * (k,Cin,Cout) + b -> (N,T-k+1,Cout)."""

    kind = "conv1d_time"
    arity = 3

    def check(self, shapes, attrs):
        x, w, b = shapes
        if len(x) != 3 or len(w) != 3 or w[1] != x[2] or b != (w[2],):
            raise ShapeError(self.kind, x, w, b)
        if x[1] < w[0]:
            raise ShapeError(self.kind, x, w, detail="sequence shorter than kernel")

    def forward(self, xs, attrs):
        x, w, b = xs
        k, cin, cout = w.shape
        n, t, _ = x.shape
        positions = t - k + 1
        cols = sliding_window_view(x, k, axis=1).transpose(0, 1, 3, 2).reshape(n, positions, k * cin)
        return cols @ w.reshape(k * cin, cout) + b, cols

    def backward(self, g, xs, out, ctx, attrs):
        x, w, _ = xs
        k, cin, cout = w.shape
        n, positions, _ = g.shape
        cols = ctx
        gw = (cols.reshape(-1, k * cin).T @ g.reshape(-1, cout)).reshape(k, cin, cout)
        gb = g.sum(axis=(0, 1))
        gcols = (g @ w.reshape(k * cin, cout).T).reshape(n, positions, k, cin)
        gx = np.zeros_like(x)
        for j in range(k):
            gx[:, j : j + positions, :] += gcols[:, :, j, :]
        return [gx, gw, gb]


# --------------------------------------------------------------------------
# Reductions and losses
# --------------------------------------------------------------------------


@register
class Sum(Primitive):
    """Sum of all elements (axis=None) or over the batch axis (axis=0)."""

    kind = "sum"
    arity = 1

    def check(self, shapes, attrs):
        axis = attrs.get("axis")
        if axis not in (None, 0) or (axis == 0 and len(shapes[0]) < 1):
            raise ShapeError(self.kind, shapes[0], detail=f"axis={axis}")

    def _count(self, x: np.ndarray, attrs) -> int:
        return 1

    def forward(self, xs, attrs):
        axis = attrs.get("axis")
        return np.sum(xs[0], axis=axis) / self._count(xs[0], attrs), None

    def backward(self, g, xs, out, ctx, attrs):
        x = xs[0]
        scaled = np.asarray(g) / self._count(x, attrs)
        if attrs.get("axis") is None:
            return [np.full_like(x, float(scaled))]
        return [np.broadcast_to(scaled, x.shape).copy()]


@register
class Mean(Sum):
    kind = "mean"

    def _count(self, x, attrs):
        return x.size if attrs.get("axis") is None else x.shape[0]


@register
class SoftmaxCrossEntropy(Primitive):
    """Mean negative log-likelihood of integer labels under softmax(logits)."""

    kind = "softmax_cross_entropy"
    arity = 1

    def check(self, shapes, attrs):
        (shape,) = shapes
        labels = np.asarray(attrs["labels"])
        if len(shape) != 2 or labels.shape != (shape[0],):
            raise ShapeError(self.kind, shape, labels.shape)
        if labels.size and (labels.min() < 0 or labels.max() >= shape[1]):
            raise InvalidArgumentError(f"{self.kind}: label outside [0, {shape[1]})")

    def forward(self, xs, attrs):
        logits = xs[0]
        labels = np.asarray(attrs["labels"], dtype=np.int64)
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        rows = np.arange(len(labels))
        loss = np.mean(log_norm - shifted[rows, labels])
        probs = np.exp(shifted - log_norm[:, None])
        return np.asarray(loss), probs

    def backward(self, g, xs, out, ctx, attrs):
        labels = np.asarray(attrs["labels"], dtype=np.int64)
        grad = ctx.copy()
        grad[np.arange(len(labels)), labels] -= 1.0
        return [grad * (float(g) / len(labels))]


@register
class RMSE(Primitive):
    kind = "rmse"
    arity = 2

    def check(self, shapes, attrs):
        _same_shapes(self.kind, shapes)

    def forward(self, xs, attrs):
        diff = xs[0] - xs[1]
        return np.sqrt(np.mean(diff * diff)), diff

    def backward(self, g, xs, out, ctx, attrs):
        if out == 0.0:
            zero = np.zeros_like(ctx)
            return [zero, zero]
        grad = ctx * (float(g) / (ctx.size * float(out)))
        return [grad, -grad]


# --------------------------------------------------------------------------
# Functional wrappers
# --------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return forward_primitive("matmul", (a, b))


def add(a: Tensor, b: Tensor) -> Tensor:
    return forward_primitive("add", (a, b))


def sub(a: Tensor, b: Tensor) -> Tensor:
    return forward_primitive("sub", (a, b))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return forward_primitive("mul", (a, b))


def scale(x: Tensor, factor: float) -> Tensor:
    return forward_primitive("scale", (x,), factor=factor)


def power(x: Tensor, exponent: int) -> Tensor:
    return forward_primitive("power", (x,), exponent=exponent)


def sqrt(x: Tensor) -> Tensor:
    return forward_primitive("sqrt", (x,))


def sigmoid(x: Tensor) -> Tensor:
    return forward_primitive("sigmoid", (x,))


def tanh(x: Tensor) -> Tensor:
    return forward_primitive("tanh", (x,))


def relu(x: Tensor) -> Tensor:
    return forward_primitive("relu", (x,))


def dropout(x: Tensor, rate: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    return forward_primitive("dropout", (x,), rate=rate, train=train, rng=rng)


def concat(*xs: Tensor) -> Tensor:
    return forward_primitive("concat", xs)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    return forward_primitive("slice_cols", (x,), start=start, stop=stop)


def broadcast_rows(x: Tensor, rows: int) -> Tensor:
    return forward_primitive("broadcast_rows", (x,), rows=rows)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return forward_primitive("reshape", (x,), shape=tuple(shape))


def select_time(x: Tensor, t: int) -> Tensor:
    return forward_primitive("select_time", (x,), t=t)


def stack_time(steps: Sequence[Tensor]) -> Tensor:
    return forward_primitive("stack_time", tuple(steps))


def max_time(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    return forward_primitive("max_time", (x,), mask=mask)


def conv1d_time(x: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    return forward_primitive("conv1d_time", (x, filters, bias))


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    return forward_primitive("sum", (x,), axis=axis)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    return forward_primitive("mean", (x,), axis=axis)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    return forward_primitive("softmax_cross_entropy", (logits,), labels=np.asarray(labels))


def rmse(a: Tensor, b: Tensor) -> Tensor:
    return forward_primitive("rmse", (a, b))


def l2_norm(x: Tensor) -> Tensor:
    """Euclidean norm of all elements."""
    return sqrt(reduce_sum(power(x, 2)))
