"""CSV and JSON file formats.

Series files are UTF-8 with LF line endings, a ``time,value`` header and one
sample per row.  Floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .alignment import SampleSeries
from .errors import CsvFormatError

SCHEMA_VERSION = 1
HEADER = ("time", "value")


def _parse_float(text: str, path, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"{path}:{line}: {column} {text!r} is not a number", line) from None
    if not math.isfinite(value):
        raise CsvFormatError(f"{path}:{line}: {column} {text!r} is not finite", line)
    return value


def parse_series(text: str, path="<string>") -> SampleSeries:
    """Parse ``time,value`` CSV text; errors carry the 1-based line number."""
    reader = csv.reader(io.StringIO(text))
    times: list[float] = []
    values: list[float] = []
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen:
            if tuple(c.lower() for c in cells) != HEADER:
                raise CsvFormatError(
                    f"{path}:{line}: expected header 'time,value', got {','.join(cells)!r}", line
                )
            header_seen = True
            continue
        if len(cells) != 2:
            raise CsvFormatError(f"{path}:{line}: expected 2 columns, got {len(cells)}", line)
        t = _parse_float(cells[0], path, line, "time")
        v = _parse_float(cells[1], path, line, "value")
        if times and t <= times[-1]:
            raise CsvFormatError(
                f"{path}:{line}: time {t!r} is not greater than previous {times[-1]!r}", line
            )
        times.append(t)
        values.append(v)
    if not header_seen:
        raise CsvFormatError(f"{path}:1: empty file, expected header 'time,value'", 1)
    if not times:
        raise CsvFormatError(f"{path}: no data rows", None)
    return SampleSeries(np.asarray(times), np.asarray(values))


def read_series(path) -> SampleSeries:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise CsvFormatError(f"{path}: not valid UTF-8 ({exc})") from None
    return parse_series(text, path)


def format_series(series: SampleSeries) -> str:
    lines = ["time,value"]
    lines.extend(f"{t!r},{v!r}" for t, v in zip(series.times.tolist(), series.values.tolist()))
    return "\n".join(lines) + "\n"


def write_series(path, series: SampleSeries) -> None:
    Path(path).write_text(format_series(series), encoding="utf-8", newline="\n")


def dumps(payload: dict) -> str:
    """Canonical JSON: sorted keys, fixed indent, no NaN."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, payload: dict) -> None:
    Path(path).write_text(dumps(payload), encoding="utf-8", newline="\n")


def write_rows(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
