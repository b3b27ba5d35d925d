"""Central-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import structlog

from autograd.tensor import Graph, Tensor, backward
from core.exceptions import GradientCheckError, GraphError

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class GradCheckReport:
    """Outcome of one finite-difference comparison."""

    max_rel_err: float
    passed: bool
    coords_checked: int
    worst_coord: tuple[int, ...] | None = None


def _evaluate(f: Callable[[Tensor], Tensor], values: np.ndarray, coord: tuple[int, ...] | None) -> float:
    out = f(Tensor(values))
    value = out.item()
    if not np.isfinite(value):
        where = f" at coordinate {coord}" if coord is not None else ""
        raise GradientCheckError(f"non-finite function value{where}")
    return value


def finite_difference_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    step: float = 1e-5,
    tol: float = 1e-4,
    *,
    floor: float = 1e-3,
    max_coords: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compares d f / d x from :func:`backward` against central differences.

    ``f`` must be deterministic (run dropout in eval mode). The relative error
    per coordinate is ``|a - n| / max(|a|, |n|, floor)``; ``floor`` keeps
    coordinates with vanishing gradient from dividing noise by noise.
    When ``max_coords`` is set, that many coordinates are sampled with a
    fixed-seed generator instead of sweeping all of them.
    """
    base = np.array(x.data, dtype=np.float64)
    point = Tensor(base, requires_grad=True)
    with Graph() as graph:
        out = f(point)
    if out.data.ndim != 0:
        raise GraphError(f"gradient check needs a scalar function, got shape {out.shape}")
    if not np.isfinite(out.item()):
        raise GradientCheckError("non-finite function value at the base point")
    if graph.contains(out):
        analytic = backward(graph, out).wrt(point)
    else:
        analytic = np.zeros_like(base)
    if not np.all(np.isfinite(analytic)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(analytic))[0])
        raise GradientCheckError(f"non-finite analytic gradient at coordinate {bad}")

    coords = list(np.ndindex(base.shape))
    if max_coords is not None and max_coords < len(coords):
        rng = np.random.default_rng(seed)
        picked = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in sorted(picked)]

    worst, worst_coord = 0.0, None
    for coord in coords:
        shifted = base.copy()
        shifted[coord] = base[coord] + step
        upper = _evaluate(f, shifted, coord)
        shifted[coord] = base[coord] - step
        lower = _evaluate(f, shifted, coord)
        numeric = (upper - lower) / (2.0 * step)
        a = float(analytic[coord])
        err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        if err > worst:
            worst, worst_coord = err, tuple(int(c) for c in coord)

    report = GradCheckReport(worst, worst <= tol, len(coords), worst_coord)
    logger.debug("gradcheck_done", max_rel_err=worst, passed=report.passed, coords=len(coords))
    return report
