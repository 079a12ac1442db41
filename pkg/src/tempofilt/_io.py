"""Small file helpers: transparent gzip and atomic (temp + rename) writes."""

from __future__ import annotations

import gzip
import io
import os
import tempfile
from pathlib import Path


def open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    data = text.encode("utf-8")
    if path.suffix == ".gz":
        # mtime=0 keeps gzip output byte-identical across runs
        data = gzip.compress(data, mtime=0)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_float(x: float) -> str:
    """Round-trippable float text, ``inf`` for the sentinel."""
    if x == float("inf"):
        return "inf"
    if float(x).is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(float(x))
