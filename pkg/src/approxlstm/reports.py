"""Run manifests and CSV/JSON report writers.

Every report embeds the hash of its run manifest.  Bodies depend only on the
manifest, so re-running a command with identical inputs reproduces them byte
for byte; the wall-clock time lives in its own ``generated_at`` field.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SIG_DIGITS = 9
TOOL = "approxlstm"


def fmt_float(x: float) -> str:
    """Decimal string with 9 significant digits; ``inf``/``nan`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{SIG_DIGITS}g}"


def json_number(x: float) -> float | None:
    """Round to 9 significant digits; non-finite values become null."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(fmt_float(x))


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def versions() -> dict:
    return {
        TOOL: package_version(),
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(command: str, inputs: Mapping, seeds: Mapping, files: Mapping | None = None) -> dict:
    """Everything that determines a run's output.

    ``files`` maps a role (``model``, ``platform`` ...) to a path; the manifest
    records the path and the sha256 of its contents.
    """
    return {
        "tool": TOOL,
        "command": command,
        "inputs": dict(inputs),
        "seeds": dict(seeds),
        "files": {role: {"path": str(p), "sha256": file_digest(p)} for role, p in (files or {}).items()},
        "versions": versions(),
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def manifest_hash(manifest: Mapping) -> str:
    return hashlib.sha256(canonical_json(manifest).encode("utf-8")).hexdigest()


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def csv_text(header: Sequence[str], rows: Iterable[Sequence], digest: str) -> str:
    """RFC-4180 CSV (CRLF line ends, minimal quoting) with a trailing manifest_hash column."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([*header, "manifest_hash"])
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row] + [digest])
    return buf.getvalue()


def json_text(manifest: Mapping, body, generated_at: str | None = None) -> str:
    doc = {
        "manifest": manifest,
        "manifest_hash": manifest_hash(manifest),
        "generated_at": generated_at or utc_timestamp(),
        "body": body,
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def report_body(text: str, fmt: str) -> str:
    """The reproducible part of a report: CSV as-is, JSON minus ``generated_at``."""
    if fmt == "csv":
        return text
    doc = json.loads(text)
    doc.pop("generated_at", None)
    return canonical_json(doc)


def write_report(path, fmt: str, manifest: Mapping, header: Sequence[str], rows: Sequence[Sequence], body) -> None:
    """Write CSV (``header``/``rows``) or JSON (``body``) to ``path`` as UTF-8."""
    if fmt == "csv":
        text = csv_text(header, rows, manifest_hash(manifest))
    elif fmt == "json":
        text = json_text(manifest, body)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
