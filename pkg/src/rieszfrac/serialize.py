"""CSV and table output with deterministic, round-trippable number formatting."""

from __future__ import annotations

import csv
import math

import numpy as np

from .energy import Configuration
from .errors import DomainError
from .fractal import CellAddress


def fmt_float(x) -> str:
    """17 significant digits: enough to reload any double bit-exactly."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def write_table(path, header, rows, comment=None):
    """CSV with an optional leading '# ...' convention line, then a header row."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        if comment:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_value(v) for v in row])


def read_table(path):
    """(header, rows-of-strings), skipping '#' comment lines."""
    with open(path, "r", newline="", encoding="utf-8") as handle:
        lines = [ln for ln in handle if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return [], []
    return rows[0], rows[1:]


def configuration_to_csv(config: Configuration, path):
    p = config.dim
    header = [f"x{k + 1}" for k in range(p)]
    if config.addresses is not None:
        header.append("address")
    rows = []
    for i in range(config.n):
        row = [fmt_float(v) for v in config.points[i]]
        if config.addresses is not None:
            row.append(str(config.addresses[i]))
        rows.append(row)
    comment = (
        f"point configuration ({config.fractal_label or 'unlabeled'}); "
        "riesz energies use the ordered-pair convention (i != j counted twice)"
    )
    write_table(path, header, rows, comment=comment)


def configuration_from_csv(path, fractal_label="") -> Configuration:
    header, rows = read_table(path)
    if not header:
        raise DomainError(f"empty configuration file {path}")
    has_addr = header[-1] == "address"
    coord_cols = header[:-1] if has_addr else header
    if not coord_cols or any(not c.startswith("x") for c in coord_cols):
        raise DomainError(f"unrecognized configuration columns {header}")
    pts = []
    addrs = [] if has_addr else None
    for row in rows:
        pts.append([float(tok) for tok in row[: len(coord_cols)]])
        if has_addr:
            addrs.append(CellAddress.parse(row[len(coord_cols)]))
    return Configuration(
        np.array(pts, dtype=float),
        addresses=tuple(addrs) if has_addr else None,
        fractal_label=fractal_label,
    )
