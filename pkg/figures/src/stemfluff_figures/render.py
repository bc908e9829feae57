"""Turn sweep CSVs into one figure: mean lines, error bars, bound bands.

The renderer never touches the simulation code.  Its whole contract with
the harness is the 18-column CSV layout and the manifest ``axes`` block;
anything with those columns plots the same way.

Output is deliberately boring: a fixed bundled style sheet, a fixed dpi,
and no timestamp metadata, so rendering the same spec twice produces
byte-identical files.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")  # file renderer; never wants a display

import matplotlib.pyplot as plt
import numpy as np

from .spec import FigureSpec

STYLE_PATH = os.path.join(os.path.dirname(__file__), "style.mplstyle")

# stripped-down savefig metadata: the default would embed the matplotlib
# version string, which breaks byte-stability across environments
_PNG_METADATA = {"Software": "stemfluff-figures"}


class MissingColumnError(ValueError):
    """A spec references a column the CSV header does not provide."""


class EmptyDataError(ValueError):
    """No data rows survive filtering; nothing to draw, no file written."""


@dataclass(frozen=True)
class RenderResult:
    """What one render() call drew: handy for smoke checks and logging."""

    path: str
    series: int  # distinct plotted mean lines
    bands: int   # distinct shaded bound bands
    points: int  # total (series, x) cells across all lines


def read_rows(path):
    """Load one CSV as (header, list of row dicts)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise EmptyDataError(f"{path}: file has no header row")
        rows = list(reader)
    return list(header), rows


def _check_columns(spec, header, path):
    for col in spec.referenced_columns():
        if col not in header:
            raise MissingColumnError(f"{path}: missing column {col!r} "
                                     f"(header has {header})")


def _series_key(row, spec):
    return tuple(row[c] for c in spec.series)


def _series_label(key, spec):
    return ", ".join(f"{c}={v}" for c, v in zip(spec.series, key))


def _sort_key(value):
    # numeric-looking series values ("6", "0.1") sort as numbers, the
    # rest lexicographically after them
    try:
        return (0, float(value), "")
    except ValueError:
        return (1, 0.0, value)


def split_rows(rows, spec):
    """Partition rows into (data, band) per the spec's aux conventions."""
    band_keys = set(spec.bands.values()) if spec.bands else set()
    data, band = [], []
    for row in rows:
        if band_keys and row.get("aux_key") in band_keys:
            band.append(row)
        elif spec.aux_key is None or row.get("aux_key") == spec.aux_key:
            data.append(row)
    return data, band


def aggregate(rows, spec):
    """Per series: sorted x values, mean y, and standard error of the mean.

    Returns {series key tuple: (x array, mean array, se array)} with keys
    ordered numerically where possible so colors are assigned stably.
    """
    y_col = "aux_value" if spec.aux_key is not None else spec.y
    cells = {}
    for row in rows:
        key = _series_key(row, spec)
        x = float(row[spec.x])
        cells.setdefault(key, {}).setdefault(x, []).append(float(row[y_col]))
    out = {}
    for key in sorted(cells, key=lambda k: tuple(_sort_key(v) for v in k)):
        xs = np.array(sorted(cells[key]))
        means = np.empty_like(xs)
        ses = np.zeros_like(xs)
        for i, x in enumerate(xs):
            vals = np.asarray(cells[key][x], dtype=float)
            means[i] = vals.mean()
            if len(vals) > 1:
                ses[i] = vals.std(ddof=1) / math.sqrt(len(vals))
        out[key] = (xs, means, ses)
    return out


def band_curves(rows, spec):
    """Per series: (x array, lower array, upper array) from bound rows.

    Only x values carrying *both* a lower and an upper entry are kept;
    a series with no complete pair contributes no band.
    """
    if not spec.bands or not rows:
        return {}
    lower_key, upper_key = spec.bands["lower"], spec.bands["upper"]
    sides = {}
    for row in rows:
        key = _series_key(row, spec)
        x = float(row[spec.x])
        side = "lower" if row["aux_key"] == lower_key else "upper"
        sides.setdefault(key, {}).setdefault(x, {})[side] = float(row["aux_value"])
    out = {}
    for key in sorted(sides, key=lambda k: tuple(_sort_key(v) for v in k)):
        xs = sorted(x for x, pair in sides[key].items()
                    if "lower" in pair and "upper" in pair)
        if not xs:
            continue
        lo = np.array([sides[key][x]["lower"] for x in xs])
        hi = np.array([sides[key][x]["upper"] for x in xs])
        out[key] = (np.array(xs), lo, hi)
    return out


def render(spec: FigureSpec) -> RenderResult:
    """Draw one figure and write it to ``spec.out``.

    Raises MissingColumnError before reading data if any referenced column
    is absent, and EmptyDataError (writing nothing) if no data rows remain
    after filtering.
    """
    rows = []
    for path in spec.csv_paths:
        header, file_rows = read_rows(path)
        _check_columns(spec, header, path)
        rows.extend(file_rows)

    data_rows, band_rows = split_rows(rows, spec)
    if not data_rows:
        raise EmptyDataError(
            f"no data rows for x={spec.x!r}, y={spec.y!r}"
            + (f", aux_key={spec.aux_key!r}" if spec.aux_key else "")
            + f" in {list(spec.csv_paths)}")

    lines = aggregate(data_rows, spec)
    bands = band_curves(band_rows, spec)

    out_dir = os.path.dirname(os.path.abspath(spec.out))
    os.makedirs(out_dir, exist_ok=True)

    points = 0
    with plt.style.context(STYLE_PATH):
        fig, ax = plt.subplots()
        colors = {}
        for key, (xs, means, ses) in lines.items():
            eb = ax.errorbar(xs, means, yerr=ses, marker="o", capsize=2,
                             label=_series_label(key, spec))
            colors[key] = eb.lines[0].get_color()
            points += len(xs)
        for key, (xs, lo, hi) in bands.items():
            ax.fill_between(xs, lo, hi, alpha=0.18,
                            color=colors.get(key),
                            label=_series_label(key, spec) + " (bound)")
        ax.set_xlabel(spec.x)
        ax.set_ylabel(spec.aux_key if spec.aux_key is not None else spec.y)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="best")
        fig.savefig(spec.out, metadata=_PNG_METADATA)
        plt.close(fig)

    return RenderResult(path=spec.out, series=len(lines), bands=len(bands),
                        points=points)
