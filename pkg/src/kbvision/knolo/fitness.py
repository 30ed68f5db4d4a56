"""Fitness metrics and their weighted combination."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import AllMetricsAbsent, ConfigError, LengthMismatch
from ..imaging import ImageRegion

CONFUSION_METRICS = ("sensitivity", "specificity", "precision", "recall", "accuracy")


def fitness_dice(pred: ImageRegion, ref: ImageRegion) -> float:
    """2|A n B| / (|A| + |B|); two empty regions agree perfectly."""
    pred.check_geometry(ref)
    total = pred.count + ref.count
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(pred.mask & ref.mask)) / total


def fitness_confusion(pred_present: Sequence[bool], ref_present: Sequence[bool]) -> dict[str, float | None]:
    """Presence/absence confusion metrics; 0/0 ratios come back as ``None``."""
    if len(pred_present) != len(ref_present):
        raise LengthMismatch(len(ref_present), len(pred_present))
    if not pred_present:
        raise LengthMismatch(1, 0)
    tp = fp = fn = tn = 0
    for p, r in zip(pred_present, ref_present):
        p, r = bool(p), bool(r)
        tp += p and r
        fp += p and not r
        fn += r and not p
        tn += not p and not r

    def ratio(a, b):
        return a / b if b else None

    sens = ratio(tp, tp + fn)
    return {
        "sensitivity": sens,
        "specificity": ratio(tn, tn + fp),
        "precision": ratio(tp, tp + fp),
        "recall": sens,
        "accuracy": ratio(tp + tn, tp + tn + fp + fn),
    }


def fitness_distance(pred_points, ref_points) -> float:
    """Mean squared Euclidean distance between paired points (mm^2)."""
    a = np.asarray(pred_points, dtype=np.float64)
    b = np.asarray(ref_points, dtype=np.float64)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(b.shape[0], a.shape[0])
    if a.shape[0] == 0:
        raise LengthMismatch(1, 0)
    return float(np.mean(np.sum((a - b) ** 2, axis=-1)))


def combine_fitness(metrics: Sequence[tuple[float | None, float]]) -> float:
    """Weighted mean over present (non-``None``, non-NaN) metric values."""
    num = den = 0.0
    for value, weight in metrics:
        if weight < 0:
            raise ValueError(f"negative metric weight {weight}")
        if value is None or (isinstance(value, float) and math.isnan(value)):
            continue
        num += weight * value
        den += weight
    if den <= 0:
        raise AllMetricsAbsent("no present metric with positive weight")
    return num / den


@dataclass(frozen=True)
class MetricTerm:
    """One fitness term.

    ``dice:<node>:<w>`` averages Dice of a node over the tuning cases;
    ``presence:<node>:<metric>:<w>`` scores object presence across cases
    with one of the confusion metrics.
    """

    kind: str
    node: str
    weight: float
    metric: str | None = None

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.node}" + (f":{self.metric}" if self.metric else "")

    @classmethod
    def parse(cls, text: str) -> "MetricTerm":
        parts = text.split(":")
        try:
            if parts[0] == "dice" and len(parts) == 3:
                return cls("dice", parts[1], float(parts[2]))
            if parts[0] == "presence" and len(parts) == 4 and parts[2] in CONFUSION_METRICS:
                return cls("presence", parts[1], float(parts[3]), parts[2])
        except ValueError:
            pass
        raise ConfigError(f"bad fitness term {text!r}; expected dice:<node>:<weight> "
                          f"or presence:<node>:<metric>:<weight>")
