"""CSV helpers: LF line endings, shortest round-trip floats, atomic writes."""

from __future__ import annotations

import csv
import io
import math
import os
from pathlib import Path

from ..errors import DataFormatError


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        f = float(v)
        if math.isnan(f):
            return "nan"
        return repr(f)
    if v is None:
        return ""
    return str(v)


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        w.writerow([format_value(v) for v in row])
    write_text_atomic(path, buf.getvalue())


def read_csv(path, required: list[str] | None = None) -> tuple[list[str], list[dict]]:
    """Read a CSV with a header row; raise DataFormatError on malformed input."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataFormatError(f"{path}: empty file (no header)") from None
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(header):
                    raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
                rows.append(dict(zip(header, rec)))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    missing = [c for c in (required or []) if c not in header]
    if missing:
        raise DataFormatError(f"{path}: missing columns {', '.join(missing)}")
    return header, rows


def parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(f"{where}: not a number: {text!r}") from None
