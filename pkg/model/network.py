"""Networks of both training stages.

``PretrainNetwork`` is the full-modality model trained with the CMD
constraint. ``IFMMINNetwork`` holds a frozen copy of its encoders (the
teacher side), a trainable copy (the student side), the imagination cascade
and the emotion classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from config import ModelConfig, TrainConfig
from core.models import (
    MODALITY_ORDER,
    FeatureOrigin,
    ImaginationOutput,
    InvariantFeature,
    SpecificFeatures,
    TeacherTargets,
)
from data.dataset import Batch
from model.encoders import Classifier, InvarianceEncoder, LSTMEncoder, TextCNNEncoder
from model.ifim import ImaginationModule
from model.params import ParameterSet, collect_state, load_collected_state


class EncoderStack:
    """Enc_a, Enc_v, Enc_t and the invariance encoder Enc'."""

    def __init__(
        self,
        cfg: ModelConfig,
        dropout: float,
        rng: np.random.Generator,
        prefix: str = "",
    ):
        self.cfg = cfg
        self.dropout = dropout
        self.prefix = prefix
        self.enc_a = LSTMEncoder(
            f"{prefix}enc_a", cfg.acoustic_dim, cfg.specific_dim, rng, cfg.lstm_forget_bias
        )
        self.enc_v = LSTMEncoder(
            f"{prefix}enc_v", cfg.visual_dim, cfg.specific_dim, rng, cfg.lstm_forget_bias
        )
        self.enc_t = TextCNNEncoder(
            f"{prefix}enc_t",
            cfg.text_dim,
            cfg.text_filters,
            cfg.text_kernel_sizes,
            cfg.specific_dim,
            rng,
        )
        self.enc_inv = InvarianceEncoder(
            f"{prefix}enc_inv",
            cfg.specific_dim,
            cfg.invariant_dim,
            dropout,
            rng,
            shared=cfg.share_invariance_encoder,
        )

    def parameter_sets(self) -> list[ParameterSet]:
        return [self.enc_a.params, self.enc_v.params, self.enc_t.params, self.enc_inv.params]

    def freeze(self) -> EncoderStack:
        for params in self.parameter_sets():
            params.freeze()
        return self

    def clone(self, prefix: str) -> EncoderStack:
        """Same architecture under new names, values copied, nothing frozen."""
        twin = EncoderStack(self.cfg, self.dropout, np.random.default_rng(0), prefix=prefix)
        for dst, src in zip(twin.parameter_sets(), self.parameter_sets()):
            dst.assign_from(src)
        return twin

    def specific(self, batch: Batch) -> SpecificFeatures:
        h_a = self.enc_a(Tensor(batch.acoustic), batch.lengths_a)
        h_v = self.enc_v(Tensor(batch.visual), batch.lengths_v)
        h_t = self.enc_t(Tensor(batch.textual), batch.lengths_t)
        return SpecificFeatures(h_a, h_v, h_t, ops.concat(h_a, h_v, h_t))

    def invariant(
        self,
        feats: SpecificFeatures,
        origin: FeatureOrigin,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> InvariantFeature:
        projected = [
            self.enc_inv.project(h_m, modality)
            for h_m, modality in zip(feats.parts(), MODALITY_ORDER)
        ]
        if not train:
            return InvariantFeature(*projected, H=ops.concat(*projected), origin=origin)
        parts = [ops.dropout(p, self.enc_inv.dropout, True, rng) for p in projected]
        return InvariantFeature(
            *parts, H=ops.concat(*parts), origin=origin, undropped=ops.concat(*projected)
        )


class PretrainNetwork:
    """Full-modality classifier over concat(h, H)."""

    def __init__(self, cfg: ModelConfig, dropout: float, rng: np.random.Generator):
        self.cfg = cfg
        self.encoders = EncoderStack(cfg, dropout, rng)
        self.classifier = Classifier(
            "pretrain_classifier",
            cfg.pretrain_classifier_width,
            cfg.classifier_hidden,
            cfg.n_classes,
            dropout,
            rng,
        )

    def parameter_sets(self) -> list[ParameterSet]:
        return [*self.encoders.parameter_sets(), self.classifier.params]

    def forward(
        self, batch: Batch, train: bool = False, rng: np.random.Generator | None = None
    ) -> tuple[Tensor, SpecificFeatures, InvariantFeature]:
        feats = self.encoders.specific(batch)
        inv = self.encoders.invariant(feats, FeatureOrigin.TEACHER, train, rng)
        logits = self.classifier(ops.concat(feats.h, inv.H), train, rng)
        return logits, feats, inv

    def predict(self, batch: Batch) -> np.ndarray:
        logits, _, _ = self.forward(batch)
        return np.argmax(logits.data, axis=1)

    def state(self) -> dict[str, np.ndarray]:
        return collect_state(self.parameter_sets())

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        load_collected_state(self.parameter_sets(), state)


@dataclass
class StudentOutput:
    logits: Tensor
    specific: SpecificFeatures
    invariant: InvariantFeature
    imagination: ImaginationOutput | None


class IFMMINNetwork:
    """Teacher/student network of the second stage.

    The teacher encoders are a frozen copy of the pretrained stack; the
    student encoders start from the same values. With ``no_ifim`` the cascade
    is dropped and the classifier reads concat(h, H') instead of C.
    """

    def __init__(
        self,
        cfg: ModelConfig,
        train_cfg: TrainConfig,
        pretrained: EncoderStack,
        rng: np.random.Generator,
    ):
        self.cfg = cfg
        self.no_ifim = train_cfg.no_ifim
        self.cascaded_input = not train_cfg.no_cascaded_input
        self.teacher = pretrained.clone("teacher.").freeze()
        self.student = pretrained.clone("student.")
        if train_cfg.freeze_student_encoders:
            self.student.freeze()
        self.ifim: ImaginationModule | None = None
        if self.no_ifim:
            classifier_width = 2 * cfg.feature_width
        else:
            self.ifim = ImaginationModule(
                "ifim", cfg.num_autoencoders, cfg.feature_width, cfg.ae_hidden_layers, rng
            )
            classifier_width = self.ifim.joint_dim
        self.classifier = Classifier(
            "classifier",
            classifier_width,
            cfg.classifier_hidden,
            cfg.n_classes,
            train_cfg.dropout,
            rng,
        )

    def parameter_sets(self) -> list[ParameterSet]:
        sets = [*self.teacher.parameter_sets(), *self.student.parameter_sets()]
        if self.ifim is not None:
            sets.append(self.ifim.params)
        sets.append(self.classifier.params)
        return sets

    def frozen_sets(self) -> list[ParameterSet]:
        return [p for p in self.parameter_sets() if p.frozen]

    def trainable_sets(self) -> list[ParameterSet]:
        return [p for p in self.parameter_sets() if not p.frozen]

    def teacher_targets(self, full_batch: Batch) -> TeacherTargets:
        """Teacher features on unmasked input, dropout off."""
        feats = self.teacher.specific(full_batch)
        inv = self.teacher.invariant(feats, FeatureOrigin.TEACHER, train=False)
        return TeacherTargets(h_full=feats.h, H_full=inv.H)

    def student_forward(
        self, batch: Batch, train: bool = False, rng: np.random.Generator | None = None
    ) -> StudentOutput:
        feats = self.student.specific(batch)
        inv = self.student.invariant(feats, FeatureOrigin.STUDENT, train, rng)
        if self.ifim is None:
            return StudentOutput(
                self.classifier(ops.concat(feats.h, inv.H), train, rng), feats, inv, None
            )
        imagined = self.ifim(feats.h, inv.H, cascaded_input=self.cascaded_input)
        return StudentOutput(self.classifier(imagined.C, train, rng), feats, inv, imagined)

    def predict(self, batch: Batch) -> np.ndarray:
        return np.argmax(self.student_forward(batch).logits.data, axis=1)

    def invariant_features(self, batch: Batch) -> np.ndarray:
        return self.student_forward(batch).invariant.H.data

    def state(self) -> dict[str, np.ndarray]:
        return collect_state(self.parameter_sets())

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        load_collected_state(self.parameter_sets(), state)


def frozen_names(sets: Iterable[ParameterSet]) -> set[str]:
    return {name for params in sets if params.frozen for name, _ in params.named_parameters()}
