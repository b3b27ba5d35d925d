"""Central moment discrepancy between batches of invariant features."""

from __future__ import annotations

import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from config import CmdConfig
from core.exceptions import InvalidArgumentError, ShapeError

_PAIRS = (("t", "a"), ("t", "v"), ("a", "v"))


def _as_tensor(x: Tensor | np.ndarray) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_samples(kind: str, x: Tensor) -> None:
    if x.ndim != 2:
        raise ShapeError(kind, x.shape, detail="expected an N x d sample matrix")
    if x.shape[0] < 2:
        raise InvalidArgumentError(f"{kind}: central moments need at least 2 samples, got {x.shape[0]}")


def _centered(x: Tensor) -> Tensor:
    return ops.sub(x, ops.broadcast_rows(ops.mean(x, axis=0), x.shape[0]))


def central_moment(x: Tensor | np.ndarray, k: int) -> Tensor:
    """Population k-th central moment of every column (divides by N)."""
    x = _as_tensor(x)
    if k < 2:
        raise InvalidArgumentError(f"central_moment: order must be >= 2, got {k}")
    _check_samples("central_moment", x)
    return ops.mean(ops.power(_centered(x), k), axis=0)


def cmd_pair(
    x: Tensor | np.ndarray, y: Tensor | np.ndarray, cfg: CmdConfig | None = None
) -> Tensor:
    """||E(x) - E(y)|| + sum over k = 2..K of ||C_k(x) - C_k(y)||.

    Batch sizes of ``x`` and ``y`` may differ; the feature width may not.
    """
    cfg = cfg or CmdConfig()
    if cfg.K < 2:
        raise InvalidArgumentError(f"cmd: K must be >= 2, got {cfg.K}")
    x, y = _as_tensor(x), _as_tensor(y)
    _check_samples("cmd_pair", x)
    _check_samples("cmd_pair", y)
    if x.shape[1] != y.shape[1]:
        raise ShapeError("cmd_pair", x.shape, y.shape, detail="feature widths differ")
    if cfg.cmd_sigmoid_squash:
        x, y = ops.sigmoid(x), ops.sigmoid(y)

    mean_x, mean_y = ops.mean(x, axis=0), ops.mean(y, axis=0)
    total = ops.l2_norm(ops.sub(mean_x, mean_y))
    cx, cy = _centered(x), _centered(y)
    for k in range(2, cfg.K + 1):
        moment_x = ops.mean(ops.power(cx, k), axis=0)
        moment_y = ops.mean(ops.power(cy, k), axis=0)
        total = ops.add(total, ops.l2_norm(ops.sub(moment_x, moment_y)))
    return total


def cmd_loss(
    H_a: Tensor | np.ndarray,
    H_v: Tensor | np.ndarray,
    H_t: Tensor | np.ndarray,
    cfg: CmdConfig | None = None,
) -> Tensor:
    """Mean of the pairwise distances over (t, a), (t, v) and (a, v)."""
    feats = {"a": _as_tensor(H_a), "v": _as_tensor(H_v), "t": _as_tensor(H_t)}
    shapes = {f.shape for f in feats.values()}
    if len(shapes) != 1:
        raise ShapeError("cmd_loss", *(f.shape for f in feats.values()))
    pairs = [cmd_pair(feats[m1], feats[m2], cfg) for m1, m2 in _PAIRS]
    return ops.scale(ops.add(ops.add(pairs[0], pairs[1]), pairs[2]), 1.0 / 3.0)
