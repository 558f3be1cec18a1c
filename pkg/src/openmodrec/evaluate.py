"""Close-set and open-set metrics, per-SNR accuracy tables, confusion
matrices, and 2-D feature export.

Predictions and labels are integer indices into a class table. In open-set
mode the table is extended by one trailing "unknown" entry: a test example
whose true class was never trained on is counted correct exactly when the
model rejects it as unknown.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import DCLSTMModel, dc_forward
from .openset import UNKNOWN_LABEL
from .represent import as_network_inputs


def mean_accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.size == 0:
        raise ValueError("cannot compute accuracy of an empty prediction set")
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    return float((predictions == labels).mean())


def confusion(predictions, labels, n_labels: int) -> np.ndarray:
    """Counts matrix with true classes as rows, predictions as columns."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    mat = np.zeros((n_labels, n_labels), dtype=np.int64)
    np.add.at(mat, (labels, predictions), 1)
    return mat


@dataclass
class SnrRow:
    snr_db: float
    accuracy: float
    count: int


def accuracy_per_snr(predictions, labels, snrs, bins=None) -> list[SnrRow]:
    """Accuracy per SNR bin. Bins default to the distinct SNR tags present."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    snrs = np.asarray(snrs, dtype=np.float64)
    if bins is None:
        bins = sorted(set(float(s) for s in snrs))
    rows = []
    for b in bins:
        mask = snrs == b
        count = int(mask.sum())
        acc = float((predictions[mask] == labels[mask]).mean()) if count else 0.0
        rows.append(SnrRow(snr_db=float(b), accuracy=acc, count=count))
    return rows


def aggregate_from(rows: list[SnrRow], min_snr: float = 0.0) -> float:
    """Count-weighted accuracy over bins at or above `min_snr`."""
    total = sum(r.count for r in rows if r.snr_db >= min_snr)
    if total == 0:
        return 0.0
    return sum(r.accuracy * r.count for r in rows if r.snr_db >= min_snr) / total


@dataclass
class EvalReport:
    labels: tuple[str, ...]
    accuracy: float
    macro_accuracy: float
    accuracy_ge_0db: float
    per_class: dict = field(default_factory=dict)
    per_snr: list = field(default_factory=list)
    conf: np.ndarray | None = None
    unknown_recall: float | None = None
    count: int = 0


def build_report(predictions, labels, snrs, class_names, open_mode: bool = False) -> EvalReport:
    """Assemble the full metric set for one prediction run.

    In open mode `class_names` are the known classes and index N denotes
    the unknown decision for both predictions and true labels.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    names = tuple(class_names) + ((UNKNOWN_LABEL,) if open_mode else ())
    n = len(names)
    acc = mean_accuracy(predictions, labels)
    conf = confusion(predictions, labels, n)
    per_class = {}
    class_accs = []
    for k, name in enumerate(names):
        row = conf[k].sum()
        if row:
            a = conf[k, k] / row
            per_class[name] = float(a)
            class_accs.append(float(a))
    macro = float(np.mean(class_accs)) if class_accs else 0.0
    rows = accuracy_per_snr(predictions, labels, snrs)
    report = EvalReport(
        labels=names,
        accuracy=acc,
        macro_accuracy=macro,
        accuracy_ge_0db=aggregate_from(rows, 0.0),
        per_class=per_class,
        per_snr=rows,
        conf=conf,
        count=int(predictions.size),
    )
    if open_mode:
        unknown_idx = n - 1
        mask = labels == unknown_idx
        if mask.any():
            report.unknown_recall = float((predictions[mask] == unknown_idx).mean())
    return report


# ---------------------------------------------------------------------------
# CSV emission (schemas: report (metric,value); per-SNR (snr_db,accuracy,count);
# confusion (row_label,col_label,count); features (x,y,true,pred))


def write_report_csv(report: EvalReport, path) -> None:
    rows = [("metric", "value")]
    rows.append(("count", str(report.count)))
    rows.append(("accuracy_micro", f"{report.accuracy:.10g}"))
    rows.append(("accuracy_macro", f"{report.macro_accuracy:.10g}"))
    rows.append(("accuracy_ge_0db", f"{report.accuracy_ge_0db:.10g}"))
    if report.unknown_recall is not None:
        rows.append(("unknown_recall", f"{report.unknown_recall:.10g}"))
    for name in report.labels:
        if name in report.per_class:
            rows.append((f"class_accuracy.{name}", f"{report.per_class[name]:.10g}"))
    _write_csv(path, rows)


def write_per_snr_csv(report: EvalReport, path) -> None:
    rows = [("snr_db", "accuracy", "count")]
    for r in report.per_snr:
        rows.append((f"{r.snr_db:.10g}", f"{r.accuracy:.10g}", str(r.count)))
    _write_csv(path, rows)


def write_confusion_csv(report: EvalReport, path) -> None:
    rows = [("row_label", "col_label", "count")]
    for i, ri in enumerate(report.labels):
        for j, cj in enumerate(report.labels):
            rows.append((ri, cj, str(int(report.conf[i, j]))))
    _write_csv(path, rows)


def read_per_snr_csv(path) -> list[SnrRow]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["snr_db", "accuracy", "count"]:
        raise ValueError(f"{path}: not a per-SNR table")
    return [SnrRow(float(r[0]), float(r[1]), int(r[2])) for r in rows[1:]]


def _write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def export_features(model: DCLSTMModel, frames, path) -> int:
    """Write (x, y, true, pred) rows from a model with the 2-neuron layer."""
    if model.viz is None:
        raise ValueError("model has no 2-neuron visualization layer")
    x1, x2 = as_network_inputs(frames, literal_eq5=model.arch.literal_eq5)
    rows = [("x", "y", "true", "pred")]
    for lo in range(0, len(frames), 512):
        feats, logits, _ = dc_forward(x1[lo : lo + 512], x2[lo : lo + 512], model)
        preds = logits.argmax(axis=1)
        for k in range(feats.shape[0]):
            frame = frames[lo + k]
            rows.append(
                (f"{feats[k, 0]:.10g}", f"{feats[k, 1]:.10g}", frame.label, model.classes[preds[k]])
            )
    _write_csv(path, rows)
    return len(rows) - 1


def read_features_csv(path) -> list[tuple[float, float, str, str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "y", "true", "pred"]:
        raise ValueError(f"{path}: not a feature export")
    return [(float(r[0]), float(r[1]), r[2], r[3]) for r in rows[1:]]
