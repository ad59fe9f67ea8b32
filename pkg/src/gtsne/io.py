"""CSV reading/writing and deterministic SVG scatter rendering."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Dataset, Embedding

# Matplotlib's tab10, a readable default for up to 10 classes; labels
# beyond that cycle.
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def _parse_label(cell: str, where: str) -> int:
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        f = float(cell)
    except ValueError:
        raise ValueError(f"{where}: label {cell!r} is not an integer") from None
    if not f.is_integer():
        raise ValueError(f"{where}: label {cell!r} is not an integer")
    return int(f)


def read_csv(path, has_header: bool = False, label_column=None) -> Dataset:
    """Load a numeric CSV into a Dataset.

    label_column may be a column name (requires a header) or a 0-based
    index; that column becomes integer labels, the rest must be numeric.
    Blank lines and '#' comment lines are skipped. Ragged rows and
    non-numeric cells raise ValueError naming the row and column. Parsing
    uses float(), which is locale-independent.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    rows = []
    numbers = []  # 1-based source line per kept row
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            rows.append([c.strip() for c in row])
            numbers.append(lineno)
    if not rows:
        raise ValueError(f"{path}: no data rows")

    header = None
    if has_header:
        header = rows[0]
        rows = rows[1:]
        numbers = numbers[1:]
        if not rows:
            raise ValueError(f"{path}: header but no data rows")

    width = len(rows[0])
    for row, lineno in zip(rows, numbers):
        if len(row) != width:
            raise ValueError(
                f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
            )

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None:
                raise ValueError("label column by name requires has_header=True")
            if label_column not in header:
                raise ValueError(f"{path}: no column named {label_column!r}")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)
            if not (0 <= label_idx < width):
                raise ValueError(f"label column index {label_idx} out of range")

    data_cols = [j for j in range(width) if j != label_idx]
    if not data_cols:
        raise ValueError(f"{path}: no numeric columns left after the label column")
    x = np.empty((len(rows), len(data_cols)))
    labels = np.empty(len(rows), dtype=np.int64) if label_idx is not None else None
    for r, (row, lineno) in enumerate(zip(rows, numbers)):
        for c, j in enumerate(data_cols):
            try:
                x[r, c] = float(row[j])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}, column {j + 1}: "
                    f"{row[j]!r} is not numeric"
                ) from None
        if label_idx is not None:
            labels[r] = _parse_label(
                row[label_idx], f"{path}: line {lineno}, column {label_idx + 1}"
            )
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return Dataset(x=x, labels=labels, name=name)


def sniff_csv(path):
    """Guess (has_header, label_column) for a CSV written by this package.

    The first non-comment line is a header when any of its cells is not
    numeric; the label column is the one named 'label' if present.
    """
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or all(not c.strip() for c in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row]
            try:
                for c in cells:
                    float(c)
                return False, None
            except ValueError:
                return True, ("label" if "label" in cells else None)
    return False, None


def write_csv(obj, path, precision: int = 17, labels=None, header: bool = True) -> None:
    """Write points (Dataset, Embedding, or matrix) as CSV.

    Floats use '%.<precision>g'; the default 17 significant digits makes
    write -> read an exact round trip. Columns are named x0.. for
    datasets, y0.. otherwise, plus a final 'label' column when labels are
    present. Lines end with a newline regardless of platform.
    """
    if isinstance(obj, Dataset):
        mat = obj.x
        if labels is None:
            labels = obj.labels
        prefix = "x"
    elif isinstance(obj, Embedding):
        mat = obj.y
        prefix = "y"
    else:
        mat = np.asarray(obj, dtype=np.float64)
        prefix = "y"
    if mat.ndim != 2:
        raise ValueError("points must form a 2-D matrix")
    if labels is not None:
        labels = np.asarray(labels)
        if len(labels) != len(mat):
            raise ValueError("labels length does not match row count")
    fmt = f"%.{int(precision)}g"
    with open(path, "w", newline="") as fh:
        if header:
            cols = [f"{prefix}{j}" for j in range(mat.shape[1])]
            if labels is not None:
                cols.append("label")
            fh.write(",".join(cols) + "\n")
        for i, row in enumerate(mat):
            cells = [fmt % v for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


@dataclass(frozen=True)
class PlotSpec:
    """Scatter rendering parameters."""

    width: float = 800.0
    height: float = 800.0
    point_radius: float = 3.0
    margin: float = 0.05      # fraction of each dimension kept clear
    palette: tuple = PALETTE

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.point_radius <= 0:
            raise ValueError("width, height, and point_radius must be positive")
        if not (0 <= self.margin < 0.5):
            raise ValueError("margin must lie in [0, 0.5)")
        if not self.palette:
            raise ValueError("palette must not be empty")


def render_svg(y, path, labels=None, spec: Optional[PlotSpec] = None) -> None:
    """Write a deterministic SVG 1.1 scatter of a 2-D map.

    Points map into the viewport with the aspect ratio preserved and a
    margin inset; a degenerate extent (single point, vertical or
    horizontal line) centers along the flat dimension. Colors cycle
    through the palette by sorted label order; without labels every point
    uses the first palette color. Maps with more than 2 columns are drawn
    by their first two.
    """
    spec = spec or PlotSpec()
    ys = y.y if isinstance(y, Embedding) else np.asarray(y, dtype=np.float64)
    if ys.ndim != 2 or ys.shape[1] < 2:
        raise ValueError("need at least 2 map columns to plot")
    if not np.all(np.isfinite(ys)):
        raise ValueError("map contains non-finite entries")
    pts = ys[:, :2]
    n = len(pts)

    if labels is not None:
        labels = np.asarray(labels)
        if len(labels) != n:
            raise ValueError("labels length does not match point count")
        uniq = np.unique(labels)
        slot = {v: i % len(spec.palette) for i, v in enumerate(uniq)}
        colors = [spec.palette[slot[v]] for v in labels]
    else:
        colors = [spec.palette[0]] * n

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    avail_w = spec.width * (1.0 - 2.0 * spec.margin)
    avail_h = spec.height * (1.0 - 2.0 * spec.margin)
    scales = []
    if extent[0] > 0:
        scales.append(avail_w / extent[0])
    if extent[1] > 0:
        scales.append(avail_h / extent[1])
    s = min(scales) if scales else 0.0
    off_x = (spec.width - s * extent[0]) / 2.0
    off_y = (spec.height - s * extent[1]) / 2.0

    px = off_x + s * (pts[:, 0] - lo[0])
    py = spec.height - (off_y + s * (pts[:, 1] - lo[1]))  # SVG y grows down

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{spec.width:g}" height="{spec.height:g}" '
        f'viewBox="0 0 {spec.width:g} {spec.height:g}">\n',
        f'<rect x="0" y="0" width="{spec.width:g}" height="{spec.height:g}" '
        'fill="#ffffff" stroke="#808080" stroke-width="1"/>\n',
    ]
    for i in range(n):
        parts.append(
            f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" '
            f'r="{spec.point_radius:g}" fill="{colors[i]}"/>\n'
        )
    parts.append("</svg>\n")
    with open(path, "w", newline="") as fh:
        fh.write("".join(parts))
