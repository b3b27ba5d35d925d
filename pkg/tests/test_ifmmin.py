"""Tests for Stage 2: the teacher/student imagination network and its losses."""

import numpy as np
import pytest

from autograd import ops
from autograd.tensor import Graph, backward
from core.exceptions import FrozenParameterError
from core.models import MODALITY_ORDER, LossWeights, MissingCondition
from data.dataset import collate
from model.network import EncoderStack, IFMMINNetwork, frozen_names
from training.conditions import mask_batch
from training.ifmmin import check_teacher_frozen, ifmmin_losses, ifmmin_step, train_ifmmin
from training.optimizer import Adam
from utils.rng import RngStreams


def _network(cfg, **flags):
    if flags:
        cfg = cfg.with_values(flags)
    stack = EncoderStack(cfg.model, cfg.train.dropout, np.random.default_rng(0))
    return IFMMINNetwork(cfg.model, cfg.train, stack, np.random.default_rng(1)), cfg


def _batches(cfg, utterances, tag="at"):
    m = cfg.model
    condition = MissingCondition.parse(tag)
    return collate(utterances, m.min_text_length), collate(mask_batch(utterances, condition), m.min_text_length)


def test_total_recomposes_from_components(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config)
    full, masked = _batches(cfg, tiny_dataset[:8])
    weights = LossWeights(1.0, 100.0)
    total, losses = ifmmin_losses(net, full, masked, weights, train=False)
    recomposed = losses.L_cls + 1.0 * losses.L_img + 100.0 * losses.L_inv
    assert abs(total.item() - recomposed) <= 1e-12
    assert losses.L_img > 0.0


def test_without_inv_loss_total_drops_the_term(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config)
    full, masked = _batches(cfg, tiny_dataset[:8])
    total, losses = ifmmin_losses(net, full, masked, LossWeights(0.5, 100.0), no_inv_loss=True, train=False)
    assert total.item() == pytest.approx(losses.L_cls + 0.5 * losses.L_img, abs=1e-12)
    assert losses.L_inv > 0.0


def test_zero_weights_leave_classification_loss(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config)
    full, masked = _batches(cfg, tiny_dataset[:8])
    total, _ = ifmmin_losses(net, full, masked, LossWeights(0.0, 0.0), train=False)
    logits = net.student_forward(masked).logits
    assert total.item() == pytest.approx(ops.softmax_cross_entropy(logits, masked.labels).item(), abs=1e-12)


def test_full_input_student_matches_teacher_at_start(tiny_config, tiny_dataset):
    """Both sides start from the pretrained values, so L_inv is 0 without masking."""
    net, cfg = _network(tiny_config)
    full = collate(tiny_dataset[:8], cfg.model.min_text_length)
    _, losses = ifmmin_losses(net, full, full, cfg.train.loss_weights, train=False)
    assert losses.L_inv == 0.0


def test_no_ifim_variant(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config, no_ifim=True)
    assert net.ifim is None
    assert net.classifier.in_dim == 2 * cfg.model.feature_width
    full, masked = _batches(cfg, tiny_dataset[:8])
    total, losses = ifmmin_losses(net, full, masked, cfg.train.loss_weights, train=False)
    assert losses.L_img == 0.0
    assert total.item() == pytest.approx(losses.L_cls + 100.0 * losses.L_inv, abs=1e-12)


def test_teacher_is_frozen_and_gets_no_gradient(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config)
    assert all(p.frozen for p in net.teacher.parameter_sets())
    assert not any(p.frozen for p in net.student.parameter_sets())
    full, masked = _batches(cfg, tiny_dataset[:8])
    with Graph() as graph:
        total, _ = ifmmin_losses(net, full, masked, cfg.train.loss_weights, rng=np.random.default_rng(0))
    grads = backward(graph, total)
    for params in net.teacher.parameter_sets():
        assert all(t.uid not in grads for t in params.tensors())
    assert any(t.uid in grads for t in net.student.enc_a.params.tensors())


def test_steps_leave_teacher_bitwise_unchanged(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config)
    teacher_before = {n: v.copy() for p in net.teacher.parameter_sets() for n, v in p.state().items()}
    student_before = net.student.enc_inv.params.state()
    optimizer = Adam(net.trainable_sets())
    condition_rng, dropout_rng = np.random.default_rng(2), np.random.default_rng(3)
    for _ in range(3):
        ifmmin_step(net, optimizer, tiny_dataset[:8], 0.01, cfg, condition_rng, dropout_rng)
    for p in net.teacher.parameter_sets():
        for name, values in p.state().items():
            assert values.tobytes() == teacher_before[name].tobytes()
    changed = net.student.enc_inv.params.state()
    assert any(not np.array_equal(changed[k], student_before[k]) for k in changed)


def test_unfrozen_teacher_is_refused(tiny_config):
    net, _ = _network(tiny_config)
    net.teacher.enc_v.params.unfreeze()
    with pytest.raises(FrozenParameterError, match="teacher.enc_v"):
        check_teacher_frozen(net)


def test_frozen_student_encoders_are_skipped_by_optimizer(tiny_config):
    net, _ = _network(tiny_config, freeze_student_encoders=True)
    optimizer = Adam(net.trainable_sets())
    assert not any(name.startswith(("student.", "teacher.")) for name in optimizer.params)
    assert "student.enc_a.w_ih" in frozen_names(net.parameter_sets())


def test_parameter_set_names(tiny_config):
    net, _ = _network(tiny_config)
    names = [p.name for p in net.parameter_sets()]
    assert names == [
        "teacher.enc_a",
        "teacher.enc_v",
        "teacher.enc_t",
        "teacher.enc_inv",
        "student.enc_a",
        "student.enc_v",
        "student.enc_t",
        "student.enc_inv",
        "ifim",
        "classifier",
    ]


def test_train_ifmmin_records_trace_and_restores_best(tiny_config, tiny_dataset):
    stack = EncoderStack(tiny_config.model, tiny_config.train.dropout, np.random.default_rng(0))
    result = train_ifmmin(tiny_dataset[:20], tiny_dataset[20:], stack, tiny_config, RngStreams(0).scoped("fold0"))
    trace = result.trace
    assert trace.stage == "ifmmin"
    assert len(trace.epochs) == 2
    assert set(trace.epochs[0].losses) == {"L_cls", "L_img", "L_inv", "total"}
    assert trace.best_val_wa == max(r.val_wa for r in trace.epochs)
    # the source stack is never modified
    assert all(not p.frozen for p in stack.parameter_sets())


def test_dropout_does_not_reach_invariance_loss(tiny_config, tiny_dataset):
    """L_inv compares H' before dropout, so full input still gives exactly 0 in train mode."""
    net, cfg = _network(tiny_config)
    assert cfg.train.dropout == 0.5
    full = collate(tiny_dataset[:8], cfg.model.min_text_length)
    _, losses = ifmmin_losses(net, full, full, cfg.train.loss_weights, train=True, rng=np.random.default_rng(4))
    assert losses.L_inv == 0.0


def test_invariance_loss_is_the_same_in_train_and_eval_mode(tiny_config, tiny_dataset):
    net, cfg = _network(tiny_config)
    full, masked = _batches(cfg, tiny_dataset[:8], "t")
    _, eval_losses = ifmmin_losses(net, full, masked, cfg.train.loss_weights, train=False)
    for seed in (5, 6):
        _, train_losses = ifmmin_losses(
            net, full, masked, cfg.train.loss_weights, train=True, rng=np.random.default_rng(seed)
        )
        assert train_losses.L_inv == pytest.approx(eval_losses.L_inv, abs=1e-15)
    assert eval_losses.L_inv > 0.0


@pytest.mark.parametrize("tag", ["a", "v", "t", "av", "at", "vt"])
def test_masked_modality_content_never_reaches_student(tiny_config, tiny_dataset, tag):
    """Rewriting a missing modality's raw frames leaves every student output unchanged."""
    net, cfg = _network(tiny_config)
    condition = MissingCondition.parse(tag)
    utterances = tiny_dataset[:8]
    altered = []
    for u in utterances:
        for modality in (mod for mod in MODALITY_ORDER if not condition.is_available(mod)):
            frames = u.frames(modality)
            u = u.with_frames(modality, np.concatenate([frames * -3.0 + 7.0, frames], axis=0))
        altered.append(u)
    m = cfg.model
    before = net.student_forward(collate(mask_batch(utterances, condition), m.min_text_length))
    after = net.student_forward(collate(mask_batch(altered, condition), m.min_text_length))
    np.testing.assert_array_equal(before.logits.data, after.logits.data)
    np.testing.assert_array_equal(before.invariant.H.data, after.invariant.H.data)
    np.testing.assert_array_equal(before.imagination.C.data, after.imagination.C.data)
