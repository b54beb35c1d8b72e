"""FRR / false-alarms-per-hour operating points and DET curve data.

A trial is detected when its score is at or above the threshold.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import FormatError, UsageError


@dataclass(frozen=True)
class Trial:
    utterance_id: str
    is_positive: bool
    score: float
    duration_s: float = 0.0

    def __post_init__(self):
        if not self.is_positive and not self.duration_s > 0:
            raise UsageError(f"negative trial {self.utterance_id!r} needs a positive duration")


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    frr_percent: float
    fa_per_hour: float


class _Counts:
    def __init__(self, trials: Sequence[Trial]):
        pos = [t.score for t in trials if t.is_positive]
        neg = [t.score for t in trials if not t.is_positive]
        if not pos:
            raise UsageError("no positive trials")
        if not neg:
            raise UsageError("no negative trials")
        self.pos = np.sort(np.asarray(pos, dtype=np.float64))
        self.neg = np.sort(np.asarray(neg, dtype=np.float64))
        self.hours = sum(t.duration_s for t in trials if not t.is_positive) / 3600.0
        if not self.hours > 0:
            raise UsageError("negative trials have no duration")

    def at(self, thresholds) -> tuple:
        thresholds = np.asarray(thresholds, dtype=np.float64)
        rejected = np.searchsorted(self.pos, thresholds, side="left")
        accepted = len(self.neg) - np.searchsorted(self.neg, thresholds, side="left")
        return 100.0 * rejected / len(self.pos), accepted / self.hours


def operating_point(trials: Sequence[Trial], threshold: float) -> OperatingPoint:
    frr, fa = _Counts(trials).at([threshold])
    return OperatingPoint(float(threshold), float(frr[0]), float(fa[0]))


def sweep(trials: Sequence[Trial]) -> List[OperatingPoint]:
    """Operating points at every distinct score plus ``+inf``, by increasing threshold.

    The ``+inf`` point rejects everything (100 % FRR, no false alarms).
    """
    counts = _Counts(trials)
    thresholds = np.unique(np.concatenate([counts.pos, counts.neg, [np.inf]]))
    frr, fa = counts.at(thresholds)
    return [OperatingPoint(float(t), float(r), float(f)) for t, r, f in zip(thresholds, frr, fa)]


def frr_at_fa(trials: Sequence[Trial], target_fa_per_hour: float) -> Optional[OperatingPoint]:
    """Lowest-FRR swept point with at most ``target_fa_per_hour`` false alarms.

    Returns None when no threshold reaches the target.
    """
    best = None
    for point in sweep(trials):
        if point.fa_per_hour <= target_fa_per_hour:
            if best is None or point.frr_percent < best.frr_percent:
                best = point
    return best


TRIAL_FIELDS = ("utterance_id", "is_positive", "score", "duration_s")
CURVE_FIELDS = ("threshold", "frr_percent", "fa_per_hour")

_TRUE = {"1", "true", "yes", "pos", "positive"}
_FALSE = {"0", "false", "no", "neg", "negative"}


def read_trials(text: str) -> List[Trial]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(TRIAL_FIELDS) - set(reader.fieldnames):
        raise FormatError(f"trial CSV needs columns {', '.join(TRIAL_FIELDS)}")
    trials = []
    for row in reader:
        flag = row["is_positive"].strip().lower()
        if flag not in _TRUE | _FALSE:
            raise FormatError(f"bad is_positive value {row['is_positive']!r}")
        try:
            score = float(row["score"])
            duration = float(row["duration_s"] or 0.0)
        except ValueError as e:
            raise FormatError(f"bad trial row {row}: {e}") from None
        try:
            trials.append(Trial(row["utterance_id"], flag in _TRUE, score, duration))
        except UsageError as e:
            raise FormatError(str(e)) from None
    return trials


def write_trials(trials: Iterable[Trial]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_FIELDS)
    for t in trials:
        w.writerow([t.utterance_id, int(t.is_positive), repr(t.score), repr(t.duration_s)])
    return buf.getvalue()


def write_curve(points: Iterable[OperatingPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_FIELDS)
    for p in points:
        w.writerow([repr(p.threshold), repr(p.frr_percent), repr(p.fa_per_hour)])
    return buf.getvalue()
