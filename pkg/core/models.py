"""Data models for the invariant-feature imagination pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from autograd.tensor import Tensor
from core.exceptions import InvalidArgumentError


class Modality(Enum):
    """Input modalities, in the fixed (a, v, t) concatenation order."""

    ACOUSTIC = "a"
    VISUAL = "v"
    TEXTUAL = "t"


MODALITY_ORDER: tuple[Modality, ...] = (Modality.ACOUSTIC, Modality.VISUAL, Modality.TEXTUAL)


class FeatureOrigin(Enum):
    """Which network produced an invariant feature."""

    TEACHER = "teacher"
    STUDENT = "student"


@dataclass(frozen=True)
class MissingCondition:
    """Subset of modalities available at test time."""

    available: frozenset[Modality]

    def __post_init__(self) -> None:
        if not self.available or len(self.available) >= len(MODALITY_ORDER):
            raise InvalidArgumentError(
                "a missing condition must keep a nonempty proper subset of {a, v, t}"
            )

    @classmethod
    def of(cls, *modalities: Modality) -> MissingCondition:
        return cls(frozenset(modalities))

    @classmethod
    def parse(cls, tag: str) -> MissingCondition:
        """Builds a condition from a tag such as ``"at"`` or ``"{a,t}"``."""
        letters = [c for c in tag if c.isalpha()]
        try:
            modalities = [Modality(c) for c in letters]
        except ValueError as e:
            raise InvalidArgumentError(f"unknown modality in condition tag {tag!r}") from e
        if len(set(modalities)) != len(modalities):
            raise InvalidArgumentError(f"repeated modality in condition tag {tag!r}")
        return cls(frozenset(modalities))

    @classmethod
    def all(cls) -> tuple[MissingCondition, ...]:
        """The six test conditions in results-table order."""
        return ALL_CONDITIONS

    def is_available(self, modality: Modality) -> bool:
        return modality in self.available

    @property
    def tag(self) -> str:
        return "".join(m.value for m in MODALITY_ORDER if m in self.available)

    @property
    def label(self) -> str:
        return "{" + ",".join(self.tag) + "}"

    def __str__(self) -> str:
        return self.label


ALL_CONDITIONS: tuple[MissingCondition, ...] = tuple(
    MissingCondition(frozenset(Modality(c) for c in tag))
    for tag in ("a", "v", "t", "av", "at", "vt")
)


@dataclass(frozen=True)
class RawUtterance:
    """Raw frame sequences of the three modalities plus the emotion label."""

    uid: str
    acoustic: np.ndarray
    visual: np.ndarray
    textual: np.ndarray
    label: int

    def __post_init__(self) -> None:
        for modality in MODALITY_ORDER:
            frames = self.frames(modality)
            if frames.ndim != 2 or frames.shape[0] < 1:
                raise InvalidArgumentError(
                    f"utterance {self.uid}: {modality.name.lower()} must be a T x D array with T >= 1, "
                    f"got shape {frames.shape}"
                )

    def frames(self, modality: Modality) -> np.ndarray:
        return {
            Modality.ACOUSTIC: self.acoustic,
            Modality.VISUAL: self.visual,
            Modality.TEXTUAL: self.textual,
        }[modality]

    def with_frames(self, modality: Modality, frames: np.ndarray) -> RawUtterance:
        parts = {m: self.frames(m) for m in MODALITY_ORDER}
        parts[modality] = frames
        return RawUtterance(
            self.uid, parts[Modality.ACOUSTIC], parts[Modality.VISUAL], parts[Modality.TEXTUAL], self.label
        )


@dataclass
class SpecificFeatures:
    """Per-modality specific features (N x d each) and their concatenation h."""

    h_a: Tensor
    h_v: Tensor
    h_t: Tensor
    h: Tensor

    def parts(self) -> tuple[Tensor, Tensor, Tensor]:
        return (self.h_a, self.h_v, self.h_t)


@dataclass
class InvariantFeature:
    """Per-modality invariant features and their concatenation H (or H').

    In train mode the parts carry dropout and ``undropped`` keeps the
    concatenation before it; the invariance loss compares that one.
    """

    H_a: Tensor
    H_v: Tensor
    H_t: Tensor
    H: Tensor
    origin: FeatureOrigin
    undropped: Optional[Tensor] = None

    def parts(self) -> tuple[Tensor, Tensor, Tensor]:
        return (self.H_a, self.H_v, self.H_t)

    @property
    def H_for_loss(self) -> Tensor:
        return self.H if self.undropped is None else self.undropped


@dataclass
class ImaginationOutput:
    """Cascade outputs: imagined feature, bottlenecks, joint representation."""

    h_prime: Tensor
    hidden_states: List[Tensor]
    C: Tensor
    deltas: List[Tensor]


@dataclass(frozen=True)
class LossWeights:
    """Balance factors of the training objectives."""

    lambda1: float = 1.0
    lambda2: float = 100.0
    lambda_cmd: float = 1.0

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "lambda_cmd"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be >= 0")


@dataclass
class TeacherTargets:
    """Frozen teacher features computed from full-modality input."""

    h_full: Tensor
    H_full: Tensor


@dataclass(frozen=True)
class StepLosses:
    """Loss components of one IF-MMIN training step."""

    L_cls: float
    L_img: float
    L_inv: float
    total: float
    condition: Optional[MissingCondition] = None

    def as_dict(self) -> Dict[str, float]:
        return {"L_cls": self.L_cls, "L_img": self.L_img, "L_inv": self.L_inv, "total": self.total}


@dataclass(frozen=True)
class PretrainLosses:
    """Loss components of one pretraining step."""

    L_cls: float
    L_cmd: float
    total: float

    def as_dict(self) -> Dict[str, float]:
        return {"L_cls": self.L_cls, "L_cmd": self.L_cmd, "total": self.total}


@dataclass
class EpochRecord:
    """Mean losses of one epoch plus the validation score used for selection."""

    epoch: int
    lr: float
    losses: Dict[str, float]
    val_wa: float

    def as_dict(self) -> Dict[str, Any]:
        return {"epoch": self.epoch, "lr": self.lr, "val_wa": self.val_wa, **self.losses}


@dataclass
class TrainingTrace:
    """Per-epoch records of one training stage."""

    stage: str
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_wa: float = float("-inf")

    def component(self, name: str) -> List[float]:
        return [record.losses[name] for record in self.epochs]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "best_epoch": self.best_epoch,
            "best_val_wa": self.best_val_wa,
            "epochs": [record.as_dict() for record in self.epochs],
        }


@dataclass(frozen=True)
class ConditionScores:
    """WA and UA under one missing condition."""

    wa: float
    ua: float


@dataclass
class ConditionReport:
    """WA/UA per missing condition and their averages over the six conditions."""

    scores: Dict[str, ConditionScores]

    @property
    def average_wa(self) -> float:
        return float(np.mean([s.wa for s in self.scores.values()]))

    @property
    def average_ua(self) -> float:
        return float(np.mean([s.ua for s in self.scores.values()]))

    @classmethod
    def mean_of(cls, reports: Iterable[ConditionReport]) -> ConditionReport:
        """Element-wise mean of several reports (folds or repeats)."""
        reports = list(reports)
        if not reports:
            raise InvalidArgumentError("cannot average zero reports")
        tags = list(reports[0].scores)
        return cls(
            {
                tag: ConditionScores(
                    wa=float(np.mean([r.scores[tag].wa for r in reports])),
                    ua=float(np.mean([r.scores[tag].ua for r in reports])),
                )
                for tag in tags
            }
        )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "conditions": {
                tag: {"WA": s.wa, "UA": s.ua} for tag, s in self.scores.items()
            },
            "average": {"WA": self.average_wa, "UA": self.average_ua},
        }
