"""Versioned CSV tables.

Files start with a ``# vdme-csv v1`` comment line, optionally followed by
``# key=value`` metadata lines, then an RFC-4180 header and rows.  Floats are
written in scientific notation with 17 significant digits.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

SCHEMA = "vdme-csv"
VERSION = "v1"
MAGIC = f"# {SCHEMA} {VERSION}"


class SchemaError(ValueError):
    """Missing or unsupported schema line."""


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.16e}"
    if hasattr(v, "dtype"):
        return format_value(v.item())
    return str(v)


def render(columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(MAGIC + "\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={format_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows, meta=None) -> str:
    text = render(columns, rows, meta)
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text)
    return text


def parse(text: str) -> tuple[list[str], list[dict], dict]:
    """Header, rows as dicts of strings, and metadata."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {SCHEMA} "):
        raise SchemaError("missing schema line")
    version = lines[0].split()[2] if len(lines[0].split()) > 2 else ""
    if version != VERSION:
        raise SchemaError(f"unsupported schema version {version!r}")
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].strip().partition("=")
        meta[key] = val
        i += 1
    reader = csv.reader(lines[i:])
    header = next(reader)
    rows = [dict(zip(header, r)) for r in reader]
    return header, rows, meta


def read_table(path) -> tuple[list[str], list[dict], dict]:
    return parse(Path(path).read_text())
