"""Artifact writers: CSV tables, the text report and static SVG plots.

CSV files use ',' separators, a header row, LF line endings and 17
significant digits so that identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import logging
import math
import pathlib
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

__all__ = ["format_value", "plot_loglog", "write_csv", "write_report"]

SVG_SALT = "orlicz-reg"


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


def write_csv(path: pathlib.Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a table; returns the number of data rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"{path.name}: row of length {len(row)}, header {len(header)}")
            w.writerow([format_value(v) for v in row])
            count += 1
    logger.info("Wrote %s (%d rows)", path, count)
    return count


def write_report(path: pathlib.Path, title: str, lines: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = [title, "=" * len(title), *lines]
    path.write_text("\n".join(body) + "\n")
    logger.info("Wrote %s", path)


def plot_loglog(
    path: pathlib.Path,
    series: dict[str, Sequence[tuple[float, float]]],
    *,
    title: str,
    xlabel: str,
    ylabel: str,
    slopes: dict[str, float] | None = None,
) -> None:
    """Log-log line plot of (x, y) series with optional fitted slopes in the legend."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for label, points in series.items():
            points = [(x, y) for x, y in points if x > 0 and y > 0]
            if not points:
                continue
            xs, ys = zip(*sorted(points))
            if slopes and label in slopes and slopes[label] is not None:
                label = f"{label} (slope {slopes[label]:.3g})"
            ax.loglog(xs, ys, marker="o", label=label)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", linewidth=0.3)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("Wrote %s", path)
