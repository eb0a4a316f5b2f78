"""Binary classification and regression metrics. Positive class = stressed = 1."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .exceptions import DimensionError, UndefinedROCError
from .nn.core import loss

REPORT_DECIMALS = 4


def _binary(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(int)


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(preds, labels) -> ConfusionMatrix:
    p = _binary(preds, "preds")
    y = _binary(labels, "labels")
    if p.shape != y.shape:
        raise DimensionError(f"{len(p)} predictions vs {len(y)} labels")
    if p.size == 0:
        raise DimensionError("nothing to evaluate")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        tn=int(np.sum((p == 0) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
    )


@dataclass
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self, decimals=REPORT_DECIMALS) -> dict:
        out = {k: round(getattr(self, k), decimals) for k in ("accuracy", "precision", "recall", "f1")}
        out["degenerate"] = dict(self.degenerate)
        return out


def _ratio(num, den):
    return (num / den, False) if den > 0 else (0.0, True)


def report(cm: ConfusionMatrix) -> ClassificationReport:
    """Accuracy/precision/recall/F1; a zero denominator gives 0 and sets its flag."""
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision, p_deg = _ratio(cm.tp, cm.tp + cm.fp)
    recall, r_deg = _ratio(cm.tp, cm.tp + cm.fn)
    f1, f_deg = _ratio(2 * precision * recall, precision + recall)
    return ClassificationReport(
        accuracy, precision, recall, f1,
        {"precision": p_deg, "recall": r_deg, "f1": f_deg},
    )


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "points": [list(p) for p in self.points],
            # first point sits above every score
            "thresholds": [None] + self.thresholds[1:].tolist(),
        }


def roc(scores, labels) -> RocCurve:
    """ROC by sweeping every distinct score, highest first; tied scores move
    diagonally. AUC by the trapezoidal rule."""
    s = np.asarray(scores, dtype=float)
    y = _binary(labels, "labels")
    if s.shape != y.shape:
        raise DimensionError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedROCError("ROC needs both classes present")

    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each group of tied scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tps = np.cumsum(y)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


@dataclass
class RegressionReport:
    rmse: float
    residuals: np.ndarray
    within_half: float
    within_two: float

    def to_dict(self, decimals=REPORT_DECIMALS) -> dict:
        r = self.residuals
        return {
            "rmse": round(self.rmse, decimals + 2),
            "within_0.5": round(self.within_half, decimals),
            "within_2": round(self.within_two, decimals),
            "n": int(r.size),
            "residual_mean": round(float(r.mean()), decimals + 2) if r.size else 0.0,
            "residual_min": float(r.min()) if r.size else 0.0,
            "residual_max": float(r.max()) if r.size else 0.0,
        }


def regression_report(preds, targets) -> RegressionReport:
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise DimensionError("predictions and targets differ in length")
    residuals = t - p
    return RegressionReport(
        rmse=loss("rmse", p, t),
        residuals=residuals,
        within_half=float(np.mean(np.abs(residuals) <= 0.5)),
        within_two=float(np.mean(np.abs(residuals) <= 2.0)),
    )
