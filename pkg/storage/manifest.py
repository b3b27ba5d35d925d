"""Per-run manifests: enough to reproduce a CLI invocation exactly."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from config import RunConfig
from utils.helpers import atomic_write_text, canonical_json, git_blob_sha1


def build_manifest(
    subcommand: str,
    cfg: RunConfig,
    dataset: Path | None,
    outputs: Iterable[Path | str] = (),
) -> dict:
    dataset_hash = None
    if dataset is not None and Path(dataset).is_file():
        dataset_hash = git_blob_sha1(dataset)
    return {
        "subcommand": subcommand,
        "run_id": cfg.run_id,
        "config_fingerprint": cfg.fingerprint(),
        "config": cfg.to_flat(),
        "seed": cfg.train.seed,
        "data_seed": cfg.synth.data_seed,
        "dataset": str(dataset) if dataset is not None else None,
        "dataset_sha1": dataset_hash,
        "outputs": sorted(str(p) for p in outputs),
    }


def write_manifest(reports_dir: Path, manifest: dict) -> Path:
    return atomic_write_text(
        Path(reports_dir) / f"manifest-{manifest['subcommand']}.json", canonical_json(manifest)
    )
