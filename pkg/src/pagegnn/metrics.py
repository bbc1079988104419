"""Accuracy and macro precision / recall / F1 from a confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix


@dataclass
class MetricsReport:
    accuracy: float
    recall: float
    precision: float
    f1: float
    confusion: np.ndarray

    def as_dict(self):
        return {"accuracy": self.accuracy, "recall": self.recall,
                "precision": self.precision, "f1": self.f1}

    def format(self, labels=None) -> str:
        lines = [f"{k:<10} {v:.4f}" for k, v in self.as_dict().items()]
        labels = labels or [str(i) for i in range(len(self.confusion))]
        width = max(6, *(len(str(lab)) for lab in labels))
        lines.append("confusion (rows = true, columns = predicted)")
        lines.append(" " * width + " " + " ".join(f"{str(lab):>{width}}" for lab in labels))
        for lab, row in zip(labels, self.confusion):
            lines.append(f"{str(lab):>{width}} " + " ".join(f"{int(v):>{width}}" for v in row))
        return "\n".join(lines)


def _safe_div(num, den):
    return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)


def compute_metrics(confusion) -> MetricsReport:
    """Rows are true classes, columns predictions.

    Precision or recall with a zero denominator counts as 0, and so does F1
    when both are 0. Macro averages run over every class.
    """
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.size == 0:
        raise EmptyMatrix(f"confusion matrix must be square and non-empty, got shape {cm.shape}")
    if cm.sum() == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    tp = np.diag(cm).astype(np.float64)
    precision = _safe_div(tp, cm.sum(axis=0).astype(np.float64))
    recall = _safe_div(tp, cm.sum(axis=1).astype(np.float64))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return MetricsReport(
        accuracy=float(tp.sum() / cm.sum()),
        recall=float(recall.mean()),
        precision=float(precision.mean()),
        f1=float(f1.mean()),
        confusion=cm.astype(np.int64),
    )


def confusion_matrix(y_true, y_pred, num_classes):
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return cm
