"""Stress-state timelines: per-record predictions over time, persistence-filtered
alerts, and CSV/JSON/SVG output."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import TimelineOrderError

TIMELINE_VERSION = 1
DEFAULT_MIN_RUN = 5
TABLE_COLUMNS = ["timestamp", "probability", "label", "tlx_score", "in_alert"]

STRESSED_COLOR = "#ff7f0e"  # orange
RELAXED_COLOR = "#1f77b4"  # blue


@dataclass
class PersistencePolicy:
    min_run: int = DEFAULT_MIN_RUN

    def __post_init__(self):
        if int(self.min_run) < 1:
            raise ValueError("min_run must be >= 1")


@dataclass
class StressTimeline:
    timestamps: np.ndarray
    probabilities: np.ndarray
    labels: np.ndarray
    tlx: Optional[np.ndarray] = None
    alerts: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float).reshape(-1)
        self.probabilities = np.asarray(self.probabilities, dtype=float).reshape(-1)
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        n = len(self.timestamps)
        if len(self.probabilities) != n or len(self.labels) != n:
            raise ValueError("timeline columns differ in length")
        if self.tlx is not None:
            self.tlx = np.asarray(self.tlx, dtype=float).reshape(-1)
            if len(self.tlx) != n:
                raise ValueError("tlx column differs in length")
        check_increasing(self.timestamps)
        self.alerts = [(float(a), float(b)) for a, b in self.alerts]

    def __len__(self):
        return len(self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, StressTimeline):
            return NotImplemented
        if (self.tlx is None) != (other.tlx is None):
            return False
        return (
            np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.probabilities, other.probabilities)
            and np.array_equal(self.labels, other.labels)
            and (self.tlx is None or np.array_equal(self.tlx, other.tlx))
            and self.alerts == other.alerts
        )

    def in_alert(self) -> np.ndarray:
        mask = np.zeros(len(self), dtype=bool)
        for start, end in self.alerts:
            mask |= (self.timestamps >= start) & (self.timestamps <= end)
        return mask

    def with_alerts(self, alerts) -> "StressTimeline":
        return StressTimeline(self.timestamps, self.probabilities, self.labels, self.tlx, alerts)


def check_increasing(timestamps):
    ts = np.asarray(timestamps, dtype=float)
    if ts.size > 1 and not np.all(np.diff(ts) > 0):
        raise TimelineOrderError("timestamps must be strictly increasing (unsorted or duplicate)")


def stressed_runs(labels) -> List[Tuple[int, int]]:
    """Maximal runs of consecutive 1s as inclusive ``(start, end)`` index pairs."""
    y = np.asarray(labels, dtype=int)
    padded = np.r_[0, y, 0]
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def alert_index_spans(labels, min_run: int) -> List[Tuple[int, int]]:
    return [(s, e) for s, e in stressed_runs(labels) if e - s + 1 >= min_run]


def apply_persistence(timeline: StressTimeline, policy: PersistencePolicy = None) -> StressTimeline:
    """Alert on stressed runs of at least ``min_run`` entries; shorter ones are ignored."""
    policy = policy or PersistencePolicy()
    spans = alert_index_spans(timeline.labels, int(policy.min_run))
    ts = timeline.timestamps
    return timeline.with_alerts([(ts[s], ts[e]) for s, e in spans])


def _batch_records(records):
    """Accepts an AlignedDataset or a sequence of ``(timestamp, {modality: vector})``."""
    if hasattr(records, "blocks"):
        return records.timestamps(), records.blocks
    records = list(records)
    ts = np.array([float(t) for t, _ in records])
    names = set().union(*(r.keys() for _, r in records)) if records else set()
    blocks = {}
    for name in names:
        rows = [r.get(name) for _, r in records]
        if any(v is None for v in rows):
            # leave the block out; the model raises a missing-modality error
            continue
        blocks[name] = np.vstack([np.asarray(v, dtype=float) for v in rows])
    return ts, blocks


def run_timeline(model, regressor=None, records=()) -> StressTimeline:
    """Score time-ordered records with a fitted fusion model (and optional TLX regressor)."""
    ts, blocks = _batch_records(records)
    check_increasing(ts)
    if len(ts) == 0:
        return StressTimeline(np.empty(0), np.empty(0), np.empty(0, dtype=int),
                              None if regressor is None else np.empty(0))
    proba = model.predict_proba(blocks)[:, 1]
    labels = (proba >= model.threshold).astype(int)
    tlx = regressor.predict(blocks) if regressor is not None else None
    return StressTimeline(ts, proba, labels, tlx)


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def export_timeline(timeline: StressTimeline, path, format: str = None) -> None:
    """Write ``format='table'`` (CSV) or ``'structured'`` (JSON); inferred from the suffix if omitted."""
    fmt = format or ("structured" if str(path).endswith(".json") else "table")
    in_alert = timeline.in_alert()
    if fmt == "table":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(TABLE_COLUMNS)
            for i in range(len(timeline)):
                w.writerow([
                    _fmt(timeline.timestamps[i]),
                    repr(float(timeline.probabilities[i])),
                    int(timeline.labels[i]),
                    "" if timeline.tlx is None else repr(float(timeline.tlx[i])),
                    int(in_alert[i]),
                ])
    elif fmt == "structured":
        doc = {
            "format_version": TIMELINE_VERSION,
            "has_tlx": timeline.tlx is not None,
            "entries": [
                {
                    "timestamp": float(timeline.timestamps[i]),
                    "probability": float(timeline.probabilities[i]),
                    "label": int(timeline.labels[i]),
                    "tlx_score": None if timeline.tlx is None else float(timeline.tlx[i]),
                    "in_alert": bool(in_alert[i]),
                }
                for i in range(len(timeline))
            ],
            "alerts": [[a, b] for a, b in timeline.alerts],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown timeline format {fmt!r}")


def import_timeline(path) -> StressTimeline:
    if str(path).endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        entries = doc["entries"]
        return StressTimeline(
            [e["timestamp"] for e in entries],
            [e["probability"] for e in entries],
            [e["label"] for e in entries],
            [e["tlx_score"] for e in entries] if doc.get("has_tlx") else None,
            [tuple(a) for a in doc["alerts"]],
        )
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    ts = [float(r["timestamp"]) for r in rows]
    has_tlx = bool(rows) and rows[0]["tlx_score"] != ""
    flags = [int(r["in_alert"]) for r in rows]
    alerts = [(ts[s], ts[e]) for s, e in stressed_runs(flags)]
    return StressTimeline(
        ts,
        [float(r["probability"]) for r in rows],
        [int(r["label"]) for r in rows],
        [float(r["tlx_score"]) for r in rows] if has_tlx else None,
        alerts,
    )


def export_alerts(timeline: StressTimeline, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["start_ts", "end_ts"])
        for a, b in timeline.alerts:
            w.writerow([_fmt(a), _fmt(b)])


def render_timeline(timeline: StressTimeline, path, width: int = 900, height: int = 300, title: str = None) -> None:
    """SVG scatter of stress probability over time: orange = stressed,
    blue = relaxed, alert spans shaded."""
    if len(timeline) == 0:
        raise ValueError("cannot render an empty timeline")
    left, right, top, bottom = 50, 20, 30, 40
    pw, ph = width - left - right, height - top - bottom
    t0, t1 = float(timeline.timestamps[0]), float(timeline.timestamps[-1])
    span = (t1 - t0) or 1.0

    def sx(t):
        return left + (float(t) - t0) / span * pw

    def sy(p):
        return top + (1.0 - float(p)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for a, b in timeline.alerts:
        x0, x1 = sx(a), sx(b)
        out.append(
            f'<rect class="alert-span" x="{x0:.2f}" y="{top}" width="{max(x1 - x0, 1.0):.2f}" '
            f'height="{ph}" fill="{STRESSED_COLOR}" fill-opacity="0.15"/>'
        )
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{sy(0.5):.2f}" x2="{left + pw}" y2="{sy(0.5):.2f}" '
               'stroke="grey" stroke-dasharray="4 3"/>')
    for p in (0.0, 0.5, 1.0):
        out.append(f'<text x="{left - 6}" y="{sy(p) + 4:.2f}" text-anchor="end" font-size="10">{p:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="11">time</text>')
    out.append(f'<text x="12" y="{top + ph / 2:.1f}" font-size="11" '
               f'transform="rotate(-90 12 {top + ph / 2:.1f})" text-anchor="middle">P(stressed)</text>')
    for t, p, y in zip(timeline.timestamps, timeline.probabilities, timeline.labels):
        cls, color = ("stressed", STRESSED_COLOR) if y == 1 else ("relaxed", RELAXED_COLOR)
        out.append(f'<circle class="mark {cls}" cx="{sx(t):.2f}" cy="{sy(p):.2f}" r="2.5" fill="{color}"/>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def span_overlap(alerts: Sequence[Tuple[float, float]], start: float, end: float, timestamps) -> float:
    """Fraction of ``timestamps`` inside ``[start, end]`` that some alert covers."""
    ts = np.asarray(timestamps, dtype=float)
    inside = (ts >= start) & (ts <= end)
    if not inside.any():
        return 0.0
    covered = np.zeros_like(inside)
    for a, b in alerts:
        covered |= (ts >= a) & (ts <= b)
    return float((covered & inside).sum() / inside.sum())
