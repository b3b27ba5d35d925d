"""Orchestrates data generation, both training stages, evaluation and ablations.

Each public method backs one CLI subcommand. Artifacts are handed between
subcommands through files only: the dataset, one Stage-1 and one Stage-2
checkpoint per fold, and JSON reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import structlog

from config import STAGE2_SETTINGS, RunConfig
from core.models import ConditionReport, RawUtterance
from data.dataset import check_dimensions, read_jsonl, write_jsonl
from data.synth import generate
from evaluation.export import export_invariant_features, write_features_csv
from evaluation.gradcheck_suite import GradCheckRow, run_gradcheck_suite
from evaluation.report import evaluate_conditions
from model.network import EncoderStack, IFMMINNetwork, PretrainNetwork
from storage.checkpoint import checkpoint_from_module, load_checkpoint, save_checkpoint
from training.ifmmin import train_ifmmin
from training.pretrain import pretrain
from training.splits import FoldSplit, kfold_split
from utils.helpers import atomic_write_text, canonical_json
from utils.rng import RngStreams

logger = structlog.get_logger(__name__)

ABLATION_VARIANTS: dict[str, dict[str, bool]] = {
    "IF-MMIN": {},
    "w/o L_inv": {"no_inv_loss": True},
    "w/o cascaded input": {"no_cascaded_input": True},
    "w/o IF-IM": {"no_ifim": True},
}


@dataclass
class RunArtifacts:
    """Files written by one subcommand plus its JSON-ready report."""

    outputs: list[Path] = field(default_factory=list)
    report: dict[str, Any] = field(default_factory=dict)


def _select(utterances: Sequence[RawUtterance], ids: np.ndarray) -> list[RawUtterance]:
    return [utterances[int(i)] for i in ids]


class RunManager:
    """Runs the pipeline for one configuration."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.paths = cfg.paths
        self._dataset: list[RawUtterance] | None = None

    # -------------------------------------------------
    # Paths and shared inputs
    # -------------------------------------------------
    def pretrain_checkpoint(self, fold: int) -> Path:
        return Path(self.paths.checkpoints_dir) / f"pretrain_fold{fold}.ckpt"

    def ifmmin_checkpoint(self, fold: int) -> Path:
        return Path(self.paths.checkpoints_dir) / f"ifmmin_fold{fold}.ckpt"

    def report_path(self, name: str) -> Path:
        return Path(self.paths.reports_dir) / name

    def dataset(self) -> list[RawUtterance]:
        if self._dataset is None:
            utterances = read_jsonl(self.paths.dataset)
            check_dimensions(utterances, self.cfg.model)
            self._dataset = utterances
        return self._dataset

    def folds(self) -> list[FoldSplit]:
        t = self.cfg.train
        return kfold_split(len(self.dataset()), t.folds, t.seed)[: t.folds_to_run]

    def _streams(self, cfg: RunConfig, fold: int) -> RngStreams:
        return RngStreams(cfg.train.seed).scoped(f"fold{fold}")

    def _write_report(self, name: str, report: dict[str, Any]) -> Path:
        return atomic_write_text(self.report_path(name), canonical_json(report))

    def _metadata(self, cfg: RunConfig, **extra: Any) -> dict[str, Any]:
        return {"run_id": cfg.run_id, "config_fingerprint": cfg.fingerprint(), "seed": cfg.train.seed, **extra}

    # -------------------------------------------------
    # Subcommands
    # -------------------------------------------------
    def generate_data(self) -> RunArtifacts:
        utterances = generate(self.cfg.synth, self.cfg.model)
        path = write_jsonl(utterances, self.paths.dataset)
        self._dataset = utterances
        return RunArtifacts(outputs=[path], report={"utterances": len(utterances)})

    def _pretrain_fold(self, cfg: RunConfig, split: FoldSplit) -> tuple[PretrainNetwork, dict[str, Any]]:
        data = self.dataset()
        result = pretrain(
            _select(data, split.train), _select(data, split.val), cfg, self._streams(cfg, split.fold).scoped("pretrain")
        )
        return result.network, result.trace.as_dict()

    def pretrain(self) -> RunArtifacts:
        artifacts = RunArtifacts()
        folds = []
        fingerprint = self.cfg.stage1_fingerprint()
        for split in self.folds():
            net, trace = self._pretrain_fold(self.cfg, split)
            ckpt = checkpoint_from_module(net, fingerprint, {"stage": "pretrain", "fold": split.fold, "trace": trace})
            artifacts.outputs.append(save_checkpoint(ckpt, self.pretrain_checkpoint(split.fold)))
            folds.append({"fold": split.fold, "trace": trace})
        artifacts.report = {"metadata": self._metadata(self.cfg), "folds": folds}
        artifacts.outputs.append(self._write_report("pretrain-report.json", artifacts.report))
        return artifacts

    def load_pretrained(self, fold: int) -> tuple[EncoderStack, list[str]]:
        ckpt, warnings = load_checkpoint(self.pretrain_checkpoint(fold), self.cfg.stage1_fingerprint())
        net = PretrainNetwork(self.cfg.model, self.cfg.train.dropout, np.random.default_rng(0))
        net.load_state(ckpt.parameters)
        return net.encoders, warnings

    def _train_fold(
        self, cfg: RunConfig, split: FoldSplit, encoders: EncoderStack
    ) -> tuple[IFMMINNetwork, dict[str, Any]]:
        data = self.dataset()
        result = train_ifmmin(
            _select(data, split.train),
            _select(data, split.val),
            encoders,
            cfg,
            self._streams(cfg, split.fold).scoped("ifmmin"),
        )
        return result.network, result.trace.as_dict()

    def train(self) -> RunArtifacts:
        artifacts = RunArtifacts()
        folds = []
        warnings: list[str] = []
        for split in self.folds():
            encoders, fold_warnings = self.load_pretrained(split.fold)
            warnings.extend(fold_warnings)
            net, trace = self._train_fold(self.cfg, split, encoders)
            metadata = {
                "stage": "ifmmin",
                "fold": split.fold,
                "trace": trace,
                "ablation": self.cfg.train.stage2_flags,
            }
            ckpt = checkpoint_from_module(net, self.cfg.fingerprint(), metadata)
            artifacts.outputs.append(save_checkpoint(ckpt, self.ifmmin_checkpoint(split.fold)))
            folds.append({"fold": split.fold, "trace": trace})
        artifacts.report = {
            "metadata": self._metadata(self.cfg, checkpoint_warnings=warnings),
            "folds": folds,
        }
        artifacts.outputs.append(self._write_report("train-report.json", artifacts.report))
        return artifacts

    def load_trained(self, fold: int) -> tuple[IFMMINNetwork, dict[str, Any], list[str]]:
        """Rebuilds the Stage-2 network with the switches it was trained with."""
        path = self.ifmmin_checkpoint(fold)
        ckpt, _ = load_checkpoint(path)
        flags = {k: bool(v) for k, v in ckpt.metadata.get("ablation", {}).items() if k in STAGE2_SETTINGS}
        cfg = self.cfg.with_ablation(flags)
        warnings = []
        if ckpt.config_fingerprint != cfg.fingerprint():
            warnings.append(
                f"{path}: saved with config {ckpt.config_fingerprint[:12]}, current config is {cfg.run_id}"
            )
            logger.warning("checkpoint_fingerprint_mismatch", path=str(path), saved=ckpt.config_fingerprint[:12])
        skeleton = EncoderStack(cfg.model, cfg.train.dropout, np.random.default_rng(0))
        net = IFMMINNetwork(cfg.model, cfg.train, skeleton, np.random.default_rng(0))
        net.load_state(ckpt.parameters)
        return net, ckpt.metadata, warnings

    def _evaluate(self, net: IFMMINNetwork, split: FoldSplit, record_metrics: bool = False) -> ConditionReport:
        t = self.cfg.train
        return evaluate_conditions(
            net,
            _select(self.dataset(), split.test),
            t.batch_size,
            self.cfg.model.min_text_length,
            record_metrics=record_metrics,
        )

    def evaluate(self) -> RunArtifacts:
        reports: list[ConditionReport] = []
        folds = []
        warnings: list[str] = []
        for split in self.folds():
            net, metadata, fold_warnings = self.load_trained(split.fold)
            warnings.extend(fold_warnings)
            report = self._evaluate(net, split, record_metrics=True)
            reports.append(report)
            folds.append({"fold": split.fold, "report": report.as_dict(), "trace": metadata.get("trace")})
        average = ConditionReport.mean_of(reports)
        for tag, scores in average.scores.items():
            logger.info("condition_scores", condition=tag, wa=scores.wa, ua=scores.ua)
        report = {
            "metadata": self._metadata(self.cfg, checkpoint_warnings=warnings),
            "folds": folds,
            **average.as_dict(),
        }
        path = self._write_report("eval-report.json", report)
        return RunArtifacts(outputs=[path], report=report)

    def export_features(self, fold: int = 0, per_condition: int = 100) -> RunArtifacts:
        splits = kfold_split(len(self.dataset()), self.cfg.train.folds, self.cfg.train.seed)
        net, _, _ = self.load_trained(fold)
        rows = export_invariant_features(
            net,
            _select(self.dataset(), splits[fold].test),
            per_condition=per_condition,
            batch_size=self.cfg.train.batch_size,
        )
        path = write_features_csv(rows, self.report_path(f"invariant-features-fold{fold}.csv"))
        return RunArtifacts(outputs=[path], report={"rows": len(rows)})

    def gradcheck(self) -> list[GradCheckRow]:
        return run_gradcheck_suite()

    def ablate(self) -> RunArtifacts:
        """Every variant over ``repeats`` seeds; Stage 1 is shared across variants."""
        t = self.cfg.train
        per_variant: dict[str, list[ConditionReport]] = {name: [] for name in ABLATION_VARIANTS}
        for repeat in range(t.repeats):
            base = self.cfg.with_values({"seed": t.seed + repeat}, source="repeat")
            for split in kfold_split(len(self.dataset()), t.folds, base.train.seed)[: t.folds_to_run]:
                pretrained, _ = self._pretrain_fold(base, split)
                for name, flags in ABLATION_VARIANTS.items():
                    cfg = base.with_ablation(flags)
                    net, _ = self._train_fold(cfg, split, pretrained.encoders)
                    report = self._evaluate(net, split)
                    per_variant[name].append(report)
                    logger.info(
                        "ablation_variant_done",
                        variant=name,
                        repeat=repeat,
                        fold=split.fold,
                        average_wa=report.average_wa,
                    )

        averaged = {name: ConditionReport.mean_of(reports) for name, reports in per_variant.items()}
        full = averaged["IF-MMIN"]
        report = {
            "metadata": self._metadata(self.cfg, repeats=t.repeats, folds_run=t.folds_to_run),
            "variants": {name: rep.as_dict() for name, rep in averaged.items()},
            "margin_vs_no_ifim": full.average_wa - averaged["w/o IF-IM"].average_wa,
            "per_repeat_average_wa": {
                name: [r.average_wa for r in reports] for name, reports in per_variant.items()
            },
        }
        path = self._write_report("ablation-report.json", report)
        return RunArtifacts(outputs=[path], report=report)
