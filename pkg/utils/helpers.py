"""General helper functions used across the application."""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

from utils.retry_decorators import retry_file_io


@retry_file_io
def _replace(src: str, dst: Path) -> None:
    os.replace(src, dst)


def atomic_write_bytes(path: Path | str, payload: bytes) -> Path:
    """Writes ``payload`` to a temp file next to ``path``, then renames it over.

    Readers never observe a half-written artifact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        _replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: Path | str, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def canonical_json(obj: Any) -> str:
    """Stable JSON text (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def git_blob_sha1(path: Path | str) -> str:
    """Content hash the way ``git hash-object`` computes it."""
    data = Path(path).read_bytes()
    digest = hashlib.sha1(f"blob {len(data)}\0".encode())
    digest.update(data)
    return digest.hexdigest()
