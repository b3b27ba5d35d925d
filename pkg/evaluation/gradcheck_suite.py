"""Finite-difference checks of every network block on toy shapes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
import structlog

from autograd import ops
from autograd.gradcheck import finite_difference_check
from autograd.tensor import Tensor
from config import CmdConfig, ModelConfig, TrainConfig
from core.metrics import GRADCHECK_TOTAL
from core.models import MissingCondition, Modality, RawUtterance
from data.dataset import collate
from model.cmd import cmd_loss
from model.encoders import Classifier, InvarianceEncoder, LSTMEncoder, TextCNNEncoder
from model.ifim import ImaginationModule
from model.network import EncoderStack, IFMMINNetwork
from model.params import ParameterSet
from training.conditions import mask_batch
from training.ifmmin import ifmmin_losses

logger = structlog.get_logger(__name__)

TOL = 1e-4
SOFTMAX_TOL = 1e-3
DEFAULT_SEEDS = (0, 1, 2)

Scalar = Callable[[Tensor], Tensor]


@dataclass(frozen=True)
class GradCheckRow:
    block: str
    target: str
    seed: int
    max_rel_err: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class _Case:
    block: str
    target: str
    f: Scalar
    x: np.ndarray
    tol: float = TOL


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.reduce_sum(ops.mul(out, Tensor(weights)))


def _through_param(params: ParameterSet, key: str, build: Callable[[], Tensor]) -> Scalar:
    """Scalar function of one parameter tensor, everything else held fixed."""

    def f(w: Tensor) -> Tensor:
        previous = params.swap(key, w)
        try:
            return build()
        finally:
            params.swap(key, previous)

    return f


def _cases(seed: int) -> Iterator[_Case]:
    rng = np.random.default_rng(seed)
    n, steps, width, hidden = 3, 4, 5, 4

    lengths = np.array([4, 2, 3])
    lstm = LSTMEncoder("enc_a", width, hidden, rng)
    x_seq = rng.standard_normal((n, steps, width))
    w_out = rng.standard_normal((n, hidden))
    yield _Case("lstm_encoder", "input", lambda x: _weighted_sum(lstm(x, lengths), w_out), x_seq)
    yield _Case(
        "lstm_encoder",
        "w_hh",
        _through_param(lstm.params, "w_hh", lambda: _weighted_sum(lstm(Tensor(x_seq), lengths), w_out)),
        lstm.params["w_hh"].data.copy(),
    )

    text_steps = 6
    cnn = TextCNNEncoder("enc_t", width, 3, (2, 3), hidden, rng)
    x_text = rng.standard_normal((n, text_steps, width))
    text_lengths = np.array([6, 3, 5])
    yield _Case("textcnn_encoder", "input", lambda x: _weighted_sum(cnn(x, text_lengths), w_out), x_text)
    yield _Case(
        "textcnn_encoder",
        "conv3.weight",
        _through_param(
            cnn.params, "conv3.weight", lambda: _weighted_sum(cnn(Tensor(x_text), text_lengths), w_out)
        ),
        cnn.params["conv3.weight"].data.copy(),
    )

    inv = InvarianceEncoder("enc_inv", hidden, hidden, 0.5, rng)
    h_m = rng.standard_normal((n, hidden))
    yield _Case(
        "invariance_encoder", "input", lambda x: _weighted_sum(inv(x, Modality.VISUAL), w_out), h_m
    )

    feat = 6
    ifim = ImaginationModule("ifim", 3, feat, (5, 3), rng)
    h = rng.standard_normal((n, feat))
    H_prime = rng.standard_normal((n, feat))
    w_delta = rng.standard_normal((n, feat))
    w_joint = rng.standard_normal((n, ifim.joint_dim))

    def imagination_loss(h_in: Tensor, H_in: Tensor) -> Tensor:
        out = ifim(h_in, H_in)
        return ops.add(_weighted_sum(out.h_prime, w_delta), _weighted_sum(out.C, w_joint))

    yield _Case("ifim", "h", lambda x: imagination_loss(x, Tensor(H_prime)), h)
    yield _Case("ifim", "H_prime", lambda x: imagination_loss(Tensor(h), x), H_prime)

    n_classes = 4
    labels = rng.integers(0, n_classes, size=n)
    clf = Classifier("classifier", feat, 5, n_classes, 0.5, rng)
    z = rng.standard_normal((n, feat))
    w_logits = rng.standard_normal((n, n_classes))
    yield _Case("classifier", "input", lambda x: _weighted_sum(clf(x), w_logits), z)

    cmd_batch = 5
    H_a, H_v, H_t = (rng.standard_normal((cmd_batch, hidden)) for _ in range(3))
    cfg = CmdConfig(cmd_k=5)
    yield _Case("cmd_loss", "H_a", lambda x: cmd_loss(x, Tensor(H_v), Tensor(H_t), cfg), H_a)
    yield _Case("cmd_loss", "H_t", lambda x: cmd_loss(Tensor(H_a), Tensor(H_v), x, cfg), H_t)

    yield _Case(
        "L_cls",
        "classifier_input",
        lambda x: ops.softmax_cross_entropy(clf(x), labels),
        z,
        SOFTMAX_TOL,
    )
    target_h = rng.standard_normal((n, feat))
    yield _Case("L_img", "h_prime", lambda x: ops.rmse(Tensor(target_h), x), h)
    target_H = rng.standard_normal((n, feat))
    yield _Case("L_inv", "H_prime", lambda x: ops.rmse(Tensor(target_H), x), H_prime)
    yield _student_loss_case(rng)


def _student_loss_case(rng: np.random.Generator) -> _Case:
    """Weighted Stage-2 total through the assembled student path, w.r.t. a student Enc' weight."""
    cfg = ModelConfig(
        acoustic_dim=3,
        visual_dim=4,
        text_dim=5,
        specific_dim=4,
        invariant_dim=4,
        text_filters=3,
        text_kernel_sizes=(2, 3),
        classifier_hidden=5,
        ae_hidden_layers=(5, 3),
        num_autoencoders=2,
    )
    train_cfg = TrainConfig(dropout=0.0)
    net = IFMMINNetwork(cfg, train_cfg, EncoderStack(cfg, 0.0, rng), rng)
    utterances = [
        RawUtterance(
            f"g{i}",
            rng.standard_normal((3, cfg.acoustic_dim)),
            rng.standard_normal((2, cfg.visual_dim)),
            rng.standard_normal((4, cfg.text_dim)),
            i % cfg.n_classes,
        )
        for i in range(4)
    ]
    full = collate(utterances, cfg.min_text_length)
    masked = collate(mask_batch(utterances, MissingCondition.parse("at")), cfg.min_text_length)
    params = net.student.enc_inv.params

    def total() -> Tensor:
        loss, _ = ifmmin_losses(net, full, masked, train_cfg.loss_weights, train=False)
        return loss

    return _Case(
        "ifmmin_losses",
        "student.enc_inv",
        _through_param(params, "fc.weight", total),
        params["fc.weight"].data.copy(),
        SOFTMAX_TOL,
    )


def run_gradcheck_suite(seeds: tuple[int, ...] = DEFAULT_SEEDS) -> list[GradCheckRow]:
    """One row per (block, target, seed)."""
    rows = []
    for seed in seeds:
        for case in _cases(seed):
            report = finite_difference_check(case.f, Tensor(case.x), tol=case.tol)
            row = GradCheckRow(case.block, case.target, seed, report.max_rel_err, case.tol, report.passed)
            rows.append(row)
            GRADCHECK_TOTAL.labels(block=case.block, status="pass" if row.passed else "fail").inc()
            if not row.passed:
                logger.warning(
                    "gradcheck_failed",
                    block=case.block,
                    target=case.target,
                    seed=seed,
                    max_rel_err=report.max_rel_err,
                    worst_coord=report.worst_coord,
                )
    logger.info("gradcheck_suite_finished", checks=len(rows), failed=sum(not r.passed for r in rows))
    return rows
