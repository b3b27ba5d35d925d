"""Command-line interface: one handler per subcommand plus shared setup."""

from __future__ import annotations

import argparse
import sys
import tomllib
from pathlib import Path
from typing import Callable, Sequence

import sentry_sdk
import structlog
from prometheus_client import start_http_server

from config import BASE_DIR, STAGE2_SETTINGS, RunConfig, load_run_config, logging_cfg, prometheus_cfg
from core.exceptions import IfmminError, ValidationError
from core.metrics import APP_INFO
from core.run_manager import RunArtifacts, RunManager
from presentation.formatters.text_formatter import TextFormatter
from storage.manifest import build_manifest, write_manifest
from utils.logging import bind_run_context, clear_run_context, setup_logging
from utils.sentry_integration import setup_sentry, tag_run

logger = structlog.get_logger(__name__)

DEFAULT_ERROR_TEXT = "unexpected failure; see the log for details"

Handler = Callable[[RunManager, argparse.Namespace], tuple[int, RunArtifacts]]


def app_version() -> str:
    try:
        with open(BASE_DIR / "pyproject.toml", "rb") as f:
            return tomllib.load(f).get("project", {}).get("version", "unknown")
    except Exception:  # Broad exception for file not found, parse error, etc.
        return "unknown"


# ---------------------------------
# Subcommand handlers
# ---------------------------------
def handle_gen_data(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    artifacts = manager.generate_data()
    print(f"wrote {artifacts.report['utterances']} utterances to {artifacts.outputs[0]}")
    return 0, artifacts


def handle_pretrain(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    artifacts = manager.pretrain()
    for fold in artifacts.report["folds"]:
        print(f"fold {fold['fold']}: best validation WA {fold['trace']['best_val_wa']:.4f}")
    return 0, artifacts


def handle_train(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    artifacts = manager.train()
    for fold in artifacts.report["folds"]:
        print(f"fold {fold['fold']}: best validation WA {fold['trace']['best_val_wa']:.4f}")
    return 0, artifacts


def handle_eval(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    artifacts = manager.evaluate()
    print(TextFormatter.condition_table(artifacts.report))
    for warning in artifacts.report["metadata"]["checkpoint_warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return 0, artifacts


def handle_export_features(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    artifacts = manager.export_features(fold=args.fold, per_condition=args.per_condition)
    print(f"wrote {artifacts.report['rows']} rows to {artifacts.outputs[0]}")
    return 0, artifacts


def handle_gradcheck(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    rows = manager.gradcheck()
    print(TextFormatter.gradcheck_table(rows))
    failed = [f"{r.block}/{r.target}/seed{r.seed}" for r in rows if not r.passed]
    report = {"checks": len(rows), "failed": failed}
    return (1 if failed else 0), RunArtifacts(report=report)


def handle_ablate(manager: RunManager, args: argparse.Namespace) -> tuple[int, RunArtifacts]:
    artifacts = manager.ablate()
    print(TextFormatter.ablation_table(artifacts.report["variants"]))
    print(f"IF-MMIN minus w/o IF-IM, average WA: {artifacts.report['margin_vs_no_ifim']:+.4f}")
    return 0, artifacts


HANDLERS: dict[str, Handler] = {
    "gen-data": handle_gen_data,
    "pretrain": handle_pretrain,
    "train": handle_train,
    "eval": handle_eval,
    "export-features": handle_export_features,
    "gradcheck": handle_gradcheck,
    "ablate": handle_ablate,
}


# ---------------------------------
# Parser
# ---------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifmmin",
        description="Missing-modality emotion recognition with invariant-feature imagination.",
    )
    parser.add_argument("--config", type=Path, help="key = value run configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one configuration key (repeatable)",
    )
    parser.add_argument("--metrics-port", type=int, default=None, help="serve Prometheus metrics (0 disables)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")

    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("gen-data", help="write the synthetic JSONL dataset")
    sub.add_parser("pretrain", help="Stage 1: CMD-constrained full-modality pretraining")
    train = sub.add_parser("train", help="Stage 2: IF-MMIN training from the Stage-1 checkpoints")
    train.add_argument("--no-inv-loss", action="store_true", help="drop L_inv from the total loss")
    train.add_argument("--no-cascaded-input", action="store_true", help="feed H' to the first autoencoder only")
    train.add_argument("--no-ifim", action="store_true", help="classify concat(h, H') without imagination")
    train.add_argument("--freeze-student-encoders", action="store_true", help="keep student encoders fixed")
    sub.add_parser("eval", help="six-condition WA/UA report")
    export = sub.add_parser("export-features", help="CSV of predicted invariant features H'")
    export.add_argument("--fold", type=int, default=0)
    export.add_argument("--per-condition", type=int, default=100)
    sub.add_parser("gradcheck", help="finite-difference check of every block")
    sub.add_parser("ablate", help="train and evaluate every ablation variant")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config, args.overrides)
    flags = {name: True for name in STAGE2_SETTINGS if getattr(args, name, False)}
    return cfg.with_values(flags, source=f"{args.subcommand} flags").validate() if flags else cfg


def _start_metrics(port: int) -> None:
    if port > 0:
        start_http_server(port)
        logger.info("metrics_server_started", port=port, path="/metrics")


def cli(argv: Sequence[str] | None = None) -> int:
    """Parses ``argv``, runs one subcommand and returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse has printed the usage already; --help exits with 0
        return 0 if e.code in (0, None) else ValidationError.exit_code
    setup_logging(args.log_level or logging_cfg.level, logging_cfg.format)
    setup_sentry(app_version())
    clear_run_context()
    bind_run_context(subcommand=args.subcommand)
    try:
        cfg = resolve_config(args)
        bind_run_context(run_id=cfg.run_id)
        tag_run(args.subcommand, cfg.run_id, cfg.train.seed)
        _start_metrics(args.metrics_port if args.metrics_port is not None else prometheus_cfg.port)
        APP_INFO.labels(version=app_version()).set(1)

        logger.info("run_started", seed=cfg.train.seed)
        manager = RunManager(cfg)
        code, artifacts = HANDLERS[args.subcommand](manager, args)
        dataset = Path(cfg.paths.dataset)
        write_manifest(
            Path(cfg.paths.reports_dir),
            build_manifest(args.subcommand, cfg, dataset if dataset.is_file() else None, artifacts.outputs),
        )
        logger.info("run_finished", exit_code=code)
        return code
    except IfmminError as e:
        logger.error("run_failed", error=str(e), error_type=type(e).__name__)
        print(f"error: {e.user_friendly}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # noqa: BLE001
        sentry_sdk.capture_exception(e)
        logger.exception("run_crashed", error_type=type(e).__name__)
        print(f"error: {DEFAULT_ERROR_TEXT} ({type(e).__name__}: {e})", file=sys.stderr)
        return 2
    finally:
        clear_run_context()
