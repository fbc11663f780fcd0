"""Atomic file writes and run manifests."""

from __future__ import annotations

import json
import os
import platform
import tempfile
from pathlib import Path


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def versions() -> dict:
    import numpy

    from . import __version__

    return {"fastgcrnn": __version__, "numpy": numpy.__version__, "python": platform.python_version()}


def write_manifest(output: str | os.PathLike, command: str, config: dict, seed) -> Path:
    """Record the effective config next to ``output`` as ``<output>.manifest.json``."""
    path = Path(str(output) + ".manifest.json")
    doc = {"command": command, "seed": seed, "config": config, "versions": versions()}
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
