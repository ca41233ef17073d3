"""Run reports and their Markdown / CSV / JSON renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any

from .core import SliceRow, SliceTable
from .dataset import (
    OBJECT_SIZE_BUCKETS,
    TUBE_DURATION_BUCKETS,
    VIDEO_LENGTH_BUCKETS,
    bucket_labels,
)
from .tr import ThresholdCurve

# (metric key, column header) in display order
DISPLAY_METRICS = {
    "stg": (
        ("t_p", "tP"), ("t_r", "tR"), ("t_iou", "tIoU"),
        ("v_p", "vP"), ("v_r", "vR"), ("v_iou", "vIoU"), ("v_iou_int", "vIoU-Int."),
    ),
    "tr": (("p_auc", "P (AUC)"), ("r_auc", "R (AUC)"), ("iou_auc", "IoU (AUC)")),
    "char": (("t_iou", "tIoU"), ("wer", "WER"), ("s_iou", "sIoU"), ("box_coverage", "Box coverage")),
    "mc": (("accuracy", "Acc"), ("accuracy_macro", "Acc (macro)")),
}

DIMENSION_TITLES = {
    "overall": "Overall",
    "video_length": "Video Length",
    "tube_duration": "Tube Duration",
    "object_size": "Object Size",
    "query_format": "Query Format",
    "modality": "Modality",
    "task_type": "Task Type",
}

# buckets that always appear, even when empty (rendered N/A)
BUCKET_VOCAB = {
    "stg": {
        "video_length": bucket_labels(VIDEO_LENGTH_BUCKETS["stg"]),
        "tube_duration": bucket_labels(TUBE_DURATION_BUCKETS),
        "object_size": bucket_labels(OBJECT_SIZE_BUCKETS["stg"]),
    },
    "tr": {"video_length": bucket_labels(VIDEO_LENGTH_BUCKETS["tr"])},
    "char": {
        "video_length": bucket_labels(VIDEO_LENGTH_BUCKETS["plot"]),
        "object_size": bucket_labels(OBJECT_SIZE_BUCKETS["plot"]),
    },
    "mc": {"video_length": bucket_labels(VIDEO_LENGTH_BUCKETS["plot"])},
}


def fill_buckets(table: SliceTable, task: str) -> SliceTable:
    """Add empty rows for vocabulary buckets that received no query."""
    names = [k for k, _ in DISPLAY_METRICS[task]]
    for dim, labels in BUCKET_VOCAB[task].items():
        rows = table.setdefault(dim, {})
        for label in labels:
            rows.setdefault(label, SliceRow(0, {k: None for k in names}))
    return table


def _dims(task: str, table: SliceTable) -> list[str]:
    order = ["overall", *BUCKET_VOCAB[task], *sorted(table)]
    seen: list[str] = []
    for d in order:
        if d in table and d not in seen:
            seen.append(d)
    return seen


def _buckets(task: str, dim: str, rows: dict) -> list[str]:
    vocab = list(BUCKET_VOCAB[task].get(dim, ()))
    return [b for b in vocab if b in rows] + sorted(b for b in rows if b not in vocab)


def fmt_pct(v: float | None) -> str:
    return "N/A" if v is None else f"{100 * v:.2f}"


@dataclass
class RunReport:
    task: str
    table: SliceTable
    diagnostics: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)
    curves: dict[str, ThresholdCurve] = field(default_factory=dict)

    def rows(self):
        """Yield ``(dimension, bucket, SliceRow)`` in display order."""
        for dim in _dims(self.task, self.table):
            for bucket in _buckets(self.task, dim, self.table[dim]):
                yield dim, bucket, self.table[dim][bucket]

    def metric(self, name: str, dim: str = "overall", bucket: str = "all") -> float | None:
        return self.table[dim][bucket].metrics.get(name)

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "table": {
                dim: {b: {"n": row.n, "metrics": dict(row.metrics)} for b, row in rows.items()}
                for dim, rows in self.table.items()
            },
            "curves": {
                k: {"thresholds": list(c.thresholds), "accuracy": list(c.accuracy)}
                for k, c in self.curves.items()
            },
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        table = {
            dim: {b: SliceRow(r["n"], r["metrics"]) for b, r in rows.items()}
            for dim, rows in d["table"].items()
        }
        curves = {
            k: ThresholdCurve(tuple(c["thresholds"]), tuple(c["accuracy"]), k)
            for k, c in d.get("curves", {}).items()
        }
        return cls(d["task"], table, d.get("diagnostics", {}), d.get("provenance", {}), curves)

    @classmethod
    def from_json(cls, text: str | bytes) -> "RunReport":
        return cls.from_dict(json.loads(text))


def render_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def render_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dimension", "bucket", "n", "metric", "value"])
    for dim, bucket, row in report.rows():
        for key, header in DISPLAY_METRICS[report.task]:
            if key in row.metrics:
                w.writerow([dim, bucket, row.n, header, fmt_pct(row.metrics[key])])
    return buf.getvalue()


def render_markdown(report: RunReport) -> str:
    metrics = DISPLAY_METRICS[report.task]
    lines = [f"# {report.task.upper()} evaluation", "", "Metrics in %.", ""]
    lines.append("| Category | Slice | N | " + " | ".join(h for _, h in metrics) + " |")
    lines.append("|---|---|---:|" + "---:|" * len(metrics))
    for dim, bucket, row in report.rows():
        cells = [fmt_pct(row.metrics.get(k)) if k in row.metrics else "" for k, _ in metrics]
        label = "" if dim == "overall" else bucket
        lines.append(
            f"| {DIMENSION_TITLES.get(dim, dim)} | {label} | {row.n} | " + " | ".join(cells) + " |"
        )

    diag = report.diagnostics
    counts = diag.get("counts", {})
    if "n_queries" in diag or counts:
        lines += ["", "## Diagnostics", ""]
        if "n_queries" in diag:
            lines.append(f"{diag.get('n_with_prediction', 0)} of {diag['n_queries']} queries have a prediction.")
        if counts:
            lines += ["", "| Event | Count |", "|---|---:|"]
            lines += [f"| {k} | {counts[k]} |" for k in sorted(counts)]
    if report.provenance:
        lines += ["", "## Provenance", ""]
        for k in sorted(report.provenance):
            lines.append(f"- {k}: `{json.dumps(report.provenance[k], sort_keys=True)}`")
    return "\n".join(lines) + "\n"


RENDERERS = {"md": render_markdown, "csv": render_csv, "json": render_json}


def render(report: RunReport, format: str = "md") -> bytes:
    try:
        fn = RENDERERS[format]
    except KeyError:
        raise ValueError(f"unknown report format {format!r}") from None
    return fn(report).encode("utf-8")
