"""Matplotlib figures written next to the tabular reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import DISPLAY_METRICS, DIMENSION_TITLES, RunReport  # noqa: E402
from .tr import auc, curves_to_csv  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.axisbelow": True,
    "svg.fonttype": "none",
    # fixed ids so reruns give identical files
    "svg.hashsalt": "stgeval",
}

CURVE_TITLES = {"iou": "IoU", "precision": "Precision", "recall": "Recall"}
PRIMARY_METRIC = {"stg": "v_iou", "tr": "iou_auc", "char": "t_iou", "mc": "accuracy"}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def plot_curves(report: RunReport, path: Path) -> Path:
    kinds = [k for k in ("iou", "precision", "recall") if k in report.curves]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, max(len(kinds), 1), figsize=(3.2 * max(len(kinds), 1), 2.8), squeeze=False)
        for i, (ax, kind) in enumerate(zip(axes[0], kinds)):
            c = report.curves[kind]
            ax.plot(c.thresholds, c.accuracy, lw=1.5)
            ax.fill_between(c.thresholds, c.accuracy, alpha=0.15)
            ax.set_xlim(0, 1)
            ax.set_ylim(0, 1.02)
            ax.set_xlabel("threshold")
            if i == 0:
                ax.set_ylabel("accuracy")
            ax.set_title(f"{CURVE_TITLES[kind]} (AUC {100 * auc(c):.2f})")
        fig.tight_layout()
        return _save(fig, path)


def plot_slices(report: RunReport, path: Path) -> Path:
    """Bar chart of the task's primary metric for every non-overall slice."""
    key = PRIMARY_METRIC[report.task]
    header = dict(DISPLAY_METRICS[report.task]).get(key, key)
    labels, values = [], []
    for dim, bucket, row in report.rows():
        v = row.metrics.get(key)
        name = "Overall" if dim == "overall" else f"{DIMENSION_TITLES.get(dim, dim)}: {bucket}"
        labels.append(f"{name} (n={row.n})")
        values.append(None if v is None else 100 * v)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 0.3 * len(labels) + 1))
        ax.barh(range(len(labels)), [0.0 if v is None else v for v in values], color="#4472c4")
        for y, v in enumerate(values):
            ax.text(1 if v is None else v + 1, y, "N/A" if v is None else f"{v:.2f}", va="center", fontsize=7)
        ax.set_yticks(range(len(labels)))
        ax.set_yticklabels(labels)
        ax.invert_yaxis()
        ax.set_xlim(0, 100)
        ax.set_xlabel(f"{header} (%)")
        fig.tight_layout()
        return _save(fig, path)


def emit_curves(report: RunReport, outdir: str | Path) -> list[Path]:
    """Write threshold curves (CSV + SVG) for retrieval runs and a per-slice
    bar chart for every run.  Returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if report.curves:
        csv_path = outdir / "curves.csv"
        csv_path.write_text(curves_to_csv(report.curves[k] for k in sorted(report.curves)))
        written.append(csv_path)
        written.append(plot_curves(report, outdir / "curves.svg"))
    written.append(plot_slices(report, outdir / f"{report.task}_slices.svg"))
    return written
