"""Deterministic experiment artifacts: JSON summaries, CSV tables, manifests.

Reruns with the same config and seed must produce byte-identical files, so
everything here is order-stable: JSON keys sorted, floats at shortest
round-trip (JSON) or 17 significant digits (CSV), LF line endings, UTF-8,
no timestamps.  Approximate results (proxy conditioning, sampled defect
estimates) carry an explicit label in both the JSON body and a CSV header
comment so they can never be mistaken for exact output.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

SCHEMA_VERSION = 1


def jsonable(obj):
    """Recursively convert dataclasses, numpy types, and containers."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if f.repr
        }
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj) -> bytes:
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2)
    return (text + "\n").encode("utf-8")


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def dump_csv(
    header: Sequence[str],
    rows: Iterable[Sequence],
    comments: Sequence[str] = (),
) -> bytes:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


class OutputBundle:
    """In-memory artifact set flushed to disk in one pass.

    Files accumulate as bytes; :meth:`write` persists them plus a manifest
    of content hashes.  A failed write removes every file it created, so a
    bundle directory is either complete (manifest present) or absent.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self._files: dict = {}

    def add_json(self, name: str, obj) -> None:
        self._add(name, dump_json(obj))

    def add_csv(
        self,
        name: str,
        header: Sequence[str],
        rows: Iterable[Sequence],
        comments: Sequence[str] = (),
    ) -> None:
        self._add(name, dump_csv(header, rows, comments))

    def _add(self, name: str, payload: bytes) -> None:
        if name in self._files:
            raise ValueError(f"duplicate artifact name {name!r}")
        if "/" in name or "\\" in name:
            raise ValueError("artifact names must be flat")
        self._files[name] = payload

    def manifest(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "files": {
                name: {
                    "sha256": hashlib.sha256(data).hexdigest(),
                    "bytes": len(data),
                }
                for name, data in sorted(self._files.items())
            },
        }

    def write(self) -> Path:
        if not self._files:
            raise ValueError("nothing to write")
        self.directory.mkdir(parents=True, exist_ok=True)
        written = []
        try:
            for name, data in sorted(self._files.items()):
                target = self.directory / name
                target.write_bytes(data)
                written.append(target)
            target = self.directory / "manifest.json"
            target.write_bytes(dump_json(self.manifest()))
            written.append(target)
        except BaseException:
            for path in written:
                try:
                    path.unlink()
                except OSError:
                    pass
            raise
        return self.directory / "manifest.json"


def read_manifest(directory) -> Optional[dict]:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))