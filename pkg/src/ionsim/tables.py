"""Comma-separated tables with a commented ``# key: value`` header, and the
JSON manifest that accompanies every output file."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .config import SimConfig


def format_value(v) -> str:
    """Shortest round-trip text for a number; integers stay integers."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def table_to_text(columns: dict, header: dict | None = None) -> str:
    """Render columns (name -> equal-length sequence) as CSV text."""
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    lengths = {c.shape[0] for c in cols}
    if len(lengths) > 1:
        raise ValueError("all columns must have the same length")
    buf = io.StringIO()
    for key, value in (header or {}).items():
        for line in str(value).splitlines() or [""]:
            buf.write(f"# {key}: {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*cols):
        writer.writerow([format_value(v.item() if hasattr(v, "item") else v) for v in row])
    return buf.getvalue()


def write_table(path, columns: dict, header: dict | None = None) -> str:
    text = table_to_text(columns, header)
    Path(path).write_text(text, encoding="utf-8")
    return text


@dataclasses.dataclass
class Table:
    header: dict
    columns: dict

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, *names):
        """The first present column among ``names``."""
        for n in names:
            if n in self.columns:
                return self.columns[n]
        raise KeyError(f"none of the columns {', '.join(names)} present")


def parse_table(text: str) -> Table:
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header.setdefault(key.strip(), value.strip())
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("no data: table is empty")
    rows = list(csv.reader(body))
    names = [n.strip() for n in rows[0]]
    if len(set(names)) != len(names):
        raise ValueError("duplicate column names")
    data = rows[1:]
    if not data:
        raise ValueError("no data rows")
    columns = {}
    for j, name in enumerate(names):
        try:
            columns[name] = np.array([float(r[j]) for r in data])
        except (IndexError, ValueError):
            raise ValueError(f"column {name!r} is not numeric or has missing entries") from None
    return Table(header, columns)


def read_table(path) -> Table:
    return parse_table(Path(path).read_text(encoding="utf-8"))


def sim_config_hash(cfg: SimConfig) -> str:
    """SHA-256 of the fully resolved simulation configuration."""
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
                          encoding="utf-8")
