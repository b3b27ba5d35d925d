"""Stage 1: full-modality pretraining with the CMD invariance constraint."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog

from autograd import ops
from autograd.tensor import Graph, Tensor, backward
from config import RunConfig
from core.exceptions import DatasetError
from core.metrics import EPOCH_LOSS, TRAIN_STEPS, VALIDATION_WA
from core.models import EpochRecord, PretrainLosses, RawUtterance, TrainingTrace
from data.dataset import Batch, collate, iter_batches
from evaluation.report import evaluate_full
from model.cmd import cmd_loss
from model.network import PretrainNetwork
from training.optimizer import Adam, lr_schedule
from utils.rng import RngStreams

logger = structlog.get_logger(__name__)


class LossAccumulator:
    """Running per-component means over the steps of one epoch."""

    def __init__(self) -> None:
        self._sums: dict[str, float] = defaultdict(float)
        self._steps = 0

    def add(self, components: dict[str, float]) -> None:
        for name, value in components.items():
            self._sums[name] += value
        self._steps += 1

    def means(self) -> dict[str, float]:
        return {name: total / max(self._steps, 1) for name, total in self._sums.items()}


def finish_epoch(
    trace: TrainingTrace, epoch: int, lr: float, losses: dict[str, float], val_wa: float
) -> bool:
    """Appends the epoch record; returns True when it is the new best."""
    trace.epochs.append(EpochRecord(epoch=epoch, lr=lr, losses=losses, val_wa=val_wa))
    for component, value in losses.items():
        EPOCH_LOSS.labels(stage=trace.stage, component=component).set(value)
    VALIDATION_WA.labels(stage=trace.stage).set(val_wa)
    logger.info("epoch_finished", stage=trace.stage, epoch=epoch, lr=lr, val_wa=val_wa, **losses)
    if val_wa > trace.best_val_wa:
        trace.best_epoch, trace.best_val_wa = epoch, val_wa
        return True
    return False


def pretrain_losses(
    net: PretrainNetwork,
    batch: Batch,
    lambda_cmd: float,
    cfg: RunConfig,
    train: bool = True,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, PretrainLosses]:
    """L_cls on concat(h, H) plus lambda_cmd times the CMD of the three H_m."""
    logits, _, inv = net.forward(batch, train, rng)
    l_cls = ops.softmax_cross_entropy(logits, batch.labels)
    l_cmd = cmd_loss(inv.H_a, inv.H_v, inv.H_t, cfg.cmd)
    total = ops.add(l_cls, ops.scale(l_cmd, lambda_cmd))
    return total, PretrainLosses(L_cls=l_cls.item(), L_cmd=l_cmd.item(), total=total.item())


def pretrain_step(
    net: PretrainNetwork,
    optimizer: Adam,
    batch: Batch,
    lr: float,
    cfg: RunConfig,
    rng: np.random.Generator | None = None,
) -> PretrainLosses:
    with Graph() as graph:
        total, losses = pretrain_losses(net, batch, cfg.train.lambda_cmd, cfg, True, rng)
    optimizer.step(backward(graph, total), lr)
    TRAIN_STEPS.labels(stage="pretrain").inc()
    return losses


@dataclass
class PretrainResult:
    network: PretrainNetwork
    trace: TrainingTrace


def pretrain(
    train_set: Sequence[RawUtterance],
    val_set: Sequence[RawUtterance],
    cfg: RunConfig,
    streams: RngStreams,
) -> PretrainResult:
    """Trains the full-modality network and restores its best-on-validation state."""
    if not train_set:
        raise DatasetError("pretraining needs a nonempty training set")
    t, m = cfg.train, cfg.model
    net = PretrainNetwork(m, t.dropout, streams.stream("init_pretrain"))
    optimizer = Adam(net.parameter_sets(), t.adam_beta1, t.adam_beta2, t.adam_eps)
    shuffle_rng = streams.stream("shuffle_pretrain")
    dropout_rng = streams.stream("dropout_pretrain")
    selection_set = val_set or train_set

    trace = TrainingTrace(stage="pretrain")
    best_state = net.state()
    for epoch in range(1, t.epochs_per_fold + 1):
        lr = lr_schedule(epoch, t.initial_lr, t.epochs_per_fold, t.constant_lr_epochs)
        meter = LossAccumulator()
        for chunk in iter_batches(train_set, t.batch_size, shuffle_rng):
            losses = pretrain_step(net, optimizer, collate(chunk, m.min_text_length), lr, cfg, dropout_rng)
            meter.add(losses.as_dict())
        val = evaluate_full(net, selection_set, t.batch_size, m.min_text_length)
        if finish_epoch(trace, epoch, lr, meter.means(), val.wa):
            best_state = net.state()

    net.load_state(best_state)
    logger.info("pretrain_finished", best_epoch=trace.best_epoch, best_val_wa=trace.best_val_wa)
    return PretrainResult(network=net, trace=trace)
