"""Stage 2: imagination training with a frozen teacher."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog

from autograd import ops
from autograd.tensor import Graph, Tensor, backward
from config import RunConfig
from core.exceptions import DatasetError, FrozenParameterError
from core.metrics import TRAIN_STEPS
from core.models import LossWeights, MissingCondition, RawUtterance, StepLosses, TrainingTrace
from data.dataset import Batch, collate, iter_batches
from evaluation.report import evaluate_conditions
from model.network import EncoderStack, IFMMINNetwork
from training.conditions import mask_batch, sample_condition
from training.optimizer import Adam, lr_schedule
from training.pretrain import LossAccumulator, finish_epoch
from utils.rng import RngStreams

logger = structlog.get_logger(__name__)


def ifmmin_losses(
    net: IFMMINNetwork,
    full_batch: Batch,
    masked_batch: Batch,
    weights: LossWeights,
    no_inv_loss: bool = False,
    train: bool = True,
    rng: np.random.Generator | None = None,
    condition: MissingCondition | None = None,
) -> tuple[Tensor, StepLosses]:
    """L_cls + lambda1 * L_img + lambda2 * L_inv for one batch.

    ``no_inv_loss`` drops the last term from the total; L_inv is still
    reported. Without the imagination cascade L_img is reported as 0.
    L_inv reads H' before the dropout of Enc'; dropout only touches what
    the cascade and the classifier see.
    """
    targets = net.teacher_targets(full_batch)
    out = net.student_forward(masked_batch, train, rng)
    l_cls = ops.softmax_cross_entropy(out.logits, masked_batch.labels)
    l_inv = ops.rmse(targets.H_full, out.invariant.H_for_loss)
    total = l_cls
    l_img_value = 0.0
    if out.imagination is not None:
        l_img = ops.rmse(targets.h_full, out.imagination.h_prime)
        l_img_value = l_img.item()
        total = ops.add(total, ops.scale(l_img, weights.lambda1))
    if not no_inv_loss:
        total = ops.add(total, ops.scale(l_inv, weights.lambda2))
    losses = StepLosses(
        L_cls=l_cls.item(),
        L_img=l_img_value,
        L_inv=l_inv.item(),
        total=total.item(),
        condition=condition,
    )
    return total, losses


def check_teacher_frozen(net: IFMMINNetwork) -> None:
    loose = [p.name for p in net.teacher.parameter_sets() if not p.frozen]
    if loose:
        raise FrozenParameterError(f"teacher parameters must be frozen: {', '.join(loose)}")


def ifmmin_step(
    net: IFMMINNetwork,
    optimizer: Adam,
    utterances: Sequence[RawUtterance],
    lr: float,
    cfg: RunConfig,
    condition_rng: np.random.Generator,
    dropout_rng: np.random.Generator | None = None,
) -> StepLosses:
    """Samples one condition, masks the batch and takes one optimizer step."""
    check_teacher_frozen(net)
    condition = sample_condition(condition_rng)
    min_len = cfg.model.min_text_length
    full = collate(utterances, min_len)
    masked = collate(mask_batch(utterances, condition), min_len)
    with Graph() as graph:
        total, losses = ifmmin_losses(
            net,
            full,
            masked,
            cfg.train.loss_weights,
            cfg.train.no_inv_loss,
            True,
            dropout_rng,
            condition,
        )
    optimizer.step(backward(graph, total), lr)
    TRAIN_STEPS.labels(stage="ifmmin").inc()
    return losses


@dataclass
class IFMMINResult:
    network: IFMMINNetwork
    trace: TrainingTrace


def train_ifmmin(
    train_set: Sequence[RawUtterance],
    val_set: Sequence[RawUtterance],
    pretrained: EncoderStack,
    cfg: RunConfig,
    streams: RngStreams,
) -> IFMMINResult:
    """Runs Stage 2 and restores the state with the best validation WA.

    Validation WA is the average over the six missing conditions.
    """
    if not train_set:
        raise DatasetError("IF-MMIN training needs a nonempty training set")
    t, m = cfg.train, cfg.model
    net = IFMMINNetwork(m, t, pretrained, streams.stream("init_ifmmin"))
    check_teacher_frozen(net)
    optimizer = Adam(net.trainable_sets(), t.adam_beta1, t.adam_beta2, t.adam_eps)
    shuffle_rng = streams.stream("shuffle_ifmmin")
    condition_rng = streams.stream("condition")
    dropout_rng = streams.stream("dropout_ifmmin")
    selection_set = val_set or train_set

    trace = TrainingTrace(stage="ifmmin")
    best_state = net.state()
    for epoch in range(1, t.epochs_per_fold + 1):
        lr = lr_schedule(epoch, t.initial_lr, t.epochs_per_fold, t.constant_lr_epochs)
        meter = LossAccumulator()
        for chunk in iter_batches(train_set, t.batch_size, shuffle_rng):
            losses = ifmmin_step(net, optimizer, chunk, lr, cfg, condition_rng, dropout_rng)
            meter.add(losses.as_dict())
        val = evaluate_conditions(net, selection_set, t.batch_size, m.min_text_length)
        if finish_epoch(trace, epoch, lr, meter.means(), val.average_wa):
            best_state = net.state()

    net.load_state(best_state)
    logger.info("ifmmin_finished", best_epoch=trace.best_epoch, best_val_wa=trace.best_val_wa)
    return IFMMINResult(network=net, trace=trace)
