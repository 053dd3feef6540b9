"""CSV serialization for the domain types.

Floats are written with ``repr`` so that reloading is bit-exact.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import BangBangSignal, SampledSeries, SpikeTrain, Trial, ValidationError

DERIVATIVE_NAMES = ("x", "v", "a", "j", "s", "c", "p")


class CSVFormatError(ValueError):
    """Malformed CSV content; ``line`` is the 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def derivative_columns(count: int) -> list[str]:
    """Column names for position and its derivatives: x, v, a, j, s, c, p, d7, ..."""
    return [DERIVATIVE_NAMES[k] if k < len(DERIVATIVE_NAMES) else f"d{k}" for k in range(count)]


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_rows(path, expected: Sequence[str] | None = None) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Return the header and ``(line_number, fields)`` for every data row."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVFormatError("empty file, expected a header row", path) from None
        if expected is not None and header[: len(expected)] != list(expected):
            raise CSVFormatError(f"expected header {','.join(expected)}, got {','.join(header)}", path, 1)
        rows = []
        for fields in reader:
            if not fields or all(not f.strip() for f in fields):
                continue
            rows.append((reader.line_num, fields))
    return header, rows


def _float(text: str, path, line) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CSVFormatError(f"not a number: {text!r}", path, line) from None
    if not math.isfinite(value):
        raise CSVFormatError(f"non-finite value: {text!r}", path, line)
    return value


# trials ---------------------------------------------------------------------


def write_trial(trial: Trial, directory) -> Path:
    path = Path(directory) / f"{trial.id}.csv"
    return write_rows(path, ("t", "x"), zip(trial.times, trial.positions))


def read_trial(path, subject: str = "", movement_type: str = "") -> Trial:
    path = Path(path)
    _, rows = read_rows(path, ("t", "x"))
    t, x = [], []
    for line, fields in rows:
        if len(fields) < 2:
            raise CSVFormatError("expected 2 columns", path, line)
        t.append(_float(fields[0], path, line))
        x.append(_float(fields[1], path, line))
    try:
        return Trial(path.stem, np.array(t), np.array(x), subject, movement_type)
    except ValidationError as exc:
        raise CSVFormatError(str(exc), path) from None


@dataclass(frozen=True)
class ManifestEntry:
    file: str
    subject: str
    movement_type: str


def write_manifest(entries: Iterable[ManifestEntry], path) -> Path:
    return write_rows(path, ("file", "subject", "movement_type"),
                      ((e.file, e.subject, e.movement_type) for e in entries))


def read_manifest(path) -> list[ManifestEntry]:
    _, rows = read_rows(path, ("file", "subject", "movement_type"))
    out = []
    for line, fields in rows:
        if len(fields) < 3:
            raise CSVFormatError("expected 3 columns: file,subject,movement_type", path, line)
        out.append(ManifestEntry(*(f.strip() for f in fields[:3])))
    return out


# series, signals and spike trains -------------------------------------------


def write_series(series: SampledSeries, path, value_name: str = "value") -> Path:
    vals = np.asarray(series.values)
    if vals.ndim == 1:
        return write_rows(path, ("t", value_name), zip(series.times, vals))
    header = ["t"] + [f"{value_name}{k}" for k in range(vals.shape[1])]
    return write_rows(path, header, ([t, *row] for t, row in zip(series.times, vals)))


def read_series(path) -> SampledSeries:
    header, rows = read_rows(path)
    data = np.array([[_float(f, path, line) for f in fields] for line, fields in rows]).reshape(-1, len(header))
    vals = data[:, 1] if len(header) == 2 else data[:, 1:]
    return SampledSeries(data[:, 0], vals)


def write_signal(signal: BangBangSignal, path) -> Path:
    """Rows ``t,u``: each switch time with the value the signal takes right after it."""
    vals = list(signal.interval_values()) + [0.0]
    return write_rows(path, ("t", "u"), zip(signal.switch_times, vals))


def read_signal(path) -> BangBangSignal:
    _, rows = read_rows(path, ("t", "u"))
    if len(rows) < 2:
        raise CSVFormatError("a signal needs at least two rows", path)
    t = [_float(f[0], path, line) for line, f in rows]
    u = [_float(f[1], path, line) for line, f in rows]
    first = u[0]
    sign = -1 if first < 0 else 1
    try:
        return BangBangSignal(abs(first), tuple(t), sign, t[-1])
    except ValidationError as exc:
        raise CSVFormatError(str(exc), path) from None


def write_spikes(spikes: SpikeTrain, path) -> Path:
    return write_rows(path, ("t", "weight"), spikes.impulses)


def read_spikes(path, duration: float) -> SpikeTrain:
    _, rows = read_rows(path, ("t", "weight"))
    imp = tuple((_float(f[0], path, line), _float(f[1], path, line)) for line, f in rows)
    return SpikeTrain(imp, duration)


def rows_to_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()
