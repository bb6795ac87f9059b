"""CSV ingestion and export.

Layout: a header row, then one row per observation with columns ``t`` (or
an ISO ``date``), ``y1..yq``, ``x1..xr``, ``w1..ws``.  Numbers are written
with 17 significant digits so a write/read cycle is bit exact.  FRED
exports (a ``DATE`` or ``observation_date`` column plus one column per
series, ``.`` for missing) are read through a series-to-role mapping and
joined on the date.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .panel import PanelError, TimeSeriesPanel, validate_panel

_ROLE = re.compile(r"^([yxw])(\d+)$")
_DATE_COLS = ("date", "observation_date")


class CSVFormatError(PanelError):
    pass


def _read_rows(path: str | Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if header is None:
                header = [c.strip() for c in row]
                continue
            rows.append((reader.line_num, [c.strip() for c in row]))
    if header is None:
        raise CSVFormatError(f"{path}: file is empty")
    if not rows:
        raise CSVFormatError(f"{path}: header but no data rows")
    return header, rows


def _role_columns(header: list[str]) -> dict[str, list[tuple[int, int]]]:
    roles: dict[str, list[tuple[int, int]]] = {"y": [], "x": [], "w": []}
    for k, name in enumerate(header):
        m = _ROLE.match(name.lower())
        if m:
            roles[m.group(1)].append((int(m.group(2)), k))
    for key, cols in roles.items():
        nums = sorted(n for n, _ in cols)
        if nums != list(range(1, len(nums) + 1)):
            raise CSVFormatError(f"columns {key}1..{key}{len(nums)} must be numbered consecutively")
        cols.sort()
    if not roles["y"]:
        raise CSVFormatError("no response columns (y1, y2, ...) in header")
    return roles


def _to_float(text: str, line: int, col: str, path: str | None = None) -> float:
    where = f"line {line}" if path is None else f"{path}, line {line}"
    try:
        v = float(text)
    except ValueError:
        raise CSVFormatError(f"{where}, column {col!r}: cannot parse {text!r} as a number") from None
    if not np.isfinite(v):
        raise CSVFormatError(f"{where}, column {col!r}: non-finite value {text!r}")
    return v


def read_panel_csv(
    path: str | Path, include_trend: bool = True, include_intercept: bool = True
) -> tuple[TimeSeriesPanel, list[str] | None]:
    """Parse the package CSV layout; returns the panel and the dates if present."""
    header, rows = _read_rows(path)
    roles = _role_columns(header)
    lower = [h.lower() for h in header]
    date_col = next((lower.index(c) for c in _DATE_COLS if c in lower), None)
    blocks = {}
    for key, cols in roles.items():
        data = np.empty((len(cols), len(rows)))
        for j, (line, row) in enumerate(rows):
            if len(row) != len(header):
                raise CSVFormatError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            for i, (_, k) in enumerate(cols):
                data[i, j] = _to_float(row[k], line, header[k])
        blocks[key] = data
    dates = [row[date_col] for _, row in rows] if date_col is not None else None
    panel = TimeSeriesPanel(blocks["y"], blocks["x"], blocks["w"], include_trend, include_intercept)
    return validate_panel(panel), dates


def write_panel_csv(panel: TimeSeriesPanel, path: str | Path, dates: Iterable[str] | None = None) -> None:
    names = [f"y{i + 1}" for i in range(panel.q)]
    names += [f"x{i + 1}" for i in range(panel.r)]
    names += [f"w{i + 1}" for i in range(panel.s)]
    data = np.vstack([panel.Y, panel.X, panel.W]).T
    first = list(dates) if dates is not None else [str(t) for t in range(1, panel.T + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date" if dates is not None else "t", *names])
        for lead, row in zip(first, data):
            w.writerow([lead, *("%.17g" % v for v in row)])


def parse_mapping(text: str) -> dict[str, str]:
    """``"DGS10=y1,DGS1=x1"`` -> ``{"DGS10": "y1", "DGS1": "x1"}``."""
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CSVFormatError(f"bad column mapping entry {part!r}; use SERIES=role")
        series, role = (s.strip() for s in part.split("=", 1))
        if not _ROLE.match(role.lower()):
            raise CSVFormatError(f"role {role!r} must look like y1, x1 or w1")
        out[series] = role.lower()
    if not out:
        raise CSVFormatError("empty column mapping")
    return out


def read_fred_csv(
    paths: Iterable[str | Path],
    mapping: Mapping[str, str],
    include_trend: bool = False,
    include_intercept: bool = True,
) -> tuple[TimeSeriesPanel, list[str]]:
    """Join FRED exports on their date column.

    Dates where any mapped series is missing (``.`` or empty) are dropped.
    """
    series: dict[str, dict[str, tuple[str, int, str]]] = {}  # date -> (path, line, text)
    for path in paths:
        header, rows = _read_rows(path)
        lower = [h.lower() for h in header]
        dc = next((lower.index(c) for c in _DATE_COLS if c in lower), None)
        if dc is None:
            raise CSVFormatError(f"{path}: no DATE column")
        for k, name in enumerate(header):
            if k == dc or name not in mapping:
                continue
            col = series.setdefault(name, {})
            for line, row in rows:
                if len(row) != len(header):
                    raise CSVFormatError(f"{path}, line {line}: expected {len(header)} fields")
                col[row[dc]] = (str(path), line, row[k])
    missing = [s for s in mapping if s not in series]
    if missing:
        raise CSVFormatError(f"series not found in inputs: {missing}")
    dates = sorted(set.intersection(*(set(c) for c in series.values())))
    keep = [d for d in dates if all(series[s][d][2] not in (".", "") for s in mapping)]
    if not keep:
        raise CSVFormatError("no dates with all mapped series observed")
    blocks: dict[str, dict[int, np.ndarray]] = {"y": {}, "x": {}, "w": {}}
    for s, role in mapping.items():
        m = _ROLE.match(role)
        vals = np.array([_to_float(series[s][d][2], series[s][d][1], s, series[s][d][0]) for d in keep])
        blocks[m.group(1)][int(m.group(2))] = vals
    arrays = {}
    for key, cols in blocks.items():
        if sorted(cols) != list(range(1, len(cols) + 1)):
            raise CSVFormatError(f"mapped {key} roles must be numbered 1..n")
        arrays[key] = np.array([cols[i] for i in sorted(cols)]).reshape(len(cols), len(keep))
    if not len(arrays["y"]):
        raise CSVFormatError("mapping has no response series (y1, ...)")
    panel = TimeSeriesPanel(arrays["y"], arrays["x"], arrays["w"], include_trend, include_intercept)
    return validate_panel(panel), keep
