"""Reading and writing dyadic datasets as CSV.

Layout: a header row ``unit_g,unit_h,y,<regressor names...>`` followed by one
row per dyad. Units are either integer ids ``1..G`` or arbitrary labels,
which are numbered in order of first appearance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dyadreg.estimator import DyadDataset
from dyadreg.exceptions import InputError
from dyadreg.graph import build_graph

__all__ = ["DyadTable", "read_dyad_csv", "write_dyad_csv"]


@dataclass(frozen=True, eq=False)
class DyadTable:
    dataset: DyadDataset
    regressor_names: list
    unit_labels: list | None  # None when the file used integer ids


def _row_error(row: int, msg: str) -> InputError:
    return InputError(f"row {row}: {msg}")


def read_dyad_csv(source, add_intercept: bool = False) -> DyadTable:
    """Parse a dyad CSV; every error names the offending file row (header = 1)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty data file") from None
    if len(header) < 4:
        raise _row_error(1, "need columns unit_g, unit_h, y and at least one regressor")
    names = header[3:]

    raw_pairs, ys, xs = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise _row_error(lineno, f"expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row[2:]]
        except ValueError:
            raise _row_error(lineno, "non-numeric outcome or regressor") from None
        if not all(math.isfinite(v) for v in vals):
            raise _row_error(lineno, "non-finite outcome or regressor")
        raw_pairs.append((lineno, row[0].strip(), row[1].strip()))
        ys.append(vals[0])
        xs.append(vals[1:])
    if not raw_pairs:
        raise InputError("data file has no rows")

    try:
        int_pairs = [(ln, int(g), int(h)) for ln, g, h in raw_pairs]
        labels = None
    except ValueError:
        labels = []
        index: dict = {}
        int_pairs = []
        for ln, g, h in raw_pairs:
            for lab in (g, h):
                if lab not in index:
                    labels.append(lab)
                    index[lab] = len(labels)
            int_pairs.append((ln, index[g], index[h]))

    seen: dict = {}
    for ln, g, h in int_pairs:
        if labels is None and (g < 1 or h < 1):
            raise _row_error(ln, f"unit ids must be positive, got ({g}, {h})")
        if g == h:
            raise _row_error(ln, f"self-pair ({g}, {h})")
        key = (min(g, h), max(g, h))
        if key in seen:
            raise _row_error(ln, f"duplicate dyad ({g}, {h}); first seen on row {seen[key]}")
        seen[key] = ln

    num_units = len(labels) if labels is not None else max(max(g, h) for _, g, h in int_pairs)
    graph = build_graph([(g, h) for _, g, h in int_pairs], num_units)
    x = np.array(xs, dtype=float)
    if add_intercept:
        x = np.column_stack([np.ones(len(xs)), x])
        names = ["(intercept)"] + names
    return DyadTable(DyadDataset(graph, np.array(ys), x), names, labels)


def write_dyad_csv(dataset: DyadDataset, dest=None, regressor_names=None,
                   drop_intercept: bool = False) -> str:
    """Write ``dataset`` losslessly (17 significant digits)."""
    x = dataset.x
    if drop_intercept:
        x = x[:, 1:]
    if regressor_names is None:
        regressor_names = [f"x{j + 1}" for j in range(x.shape[1])]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["unit_g", "unit_h", "y", *regressor_names])
    for (g, h), yv, row in zip(dataset.graph.pairs, dataset.y, x):
        writer.writerow([int(g), int(h), "%.17g" % yv, *("%.17g" % v for v in row)])
    text = buf.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    elif dest is not None:
        dest.write(text)
    return text
