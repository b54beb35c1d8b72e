"""Per-user decision threshold from enrollment queries and generated negatives.

The threshold blends the mean cross-query positive score and the mean
negative score::

    delta = tau * mean(positive) + (1 - tau) * mean(negative)

Each hypothesis scores the *other* queries as positives, never its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

from .decoder import DecoderConfig, score_window
from .enrollment import HypothesisFst
from .errors import FormatError, InsufficientQueriesError, UsageError
from .posteriorgram import Posteriorgram

DEFAULT_TAU = 0.38


@dataclass(frozen=True)
class ThresholdConfig:
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise UsageError(f"tau must be in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class EnrollmentProfile:
    """Scores and threshold for one user's keyword.

    ``positive_scores`` is ordered by (hypothesis a, query a') with a' != a;
    ``negative_scores`` by (hypothesis a, negative b).
    """

    hypotheses: tuple
    positive_scores: tuple
    negative_scores: tuple
    tau: float
    delta: float

    @property
    def num_queries(self) -> int:
        return len(self.hypotheses)

    @property
    def negatives_per_hypothesis(self) -> int:
        return len(self.negative_scores) // max(self.num_queries, 1)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def blend(positive_scores: Sequence[float], negative_scores: Sequence[float], tau: float) -> float:
    """Threshold from precomputed scores, clamped between the two means."""
    if not positive_scores or not negative_scores:
        raise UsageError("need positive and negative scores")
    pos, neg = _mean(positive_scores), _mean(negative_scores)
    delta = tau * pos + (1.0 - tau) * neg
    return min(max(delta, min(pos, neg)), max(pos, neg))


NegativeSets = Union[Sequence[Posteriorgram], Sequence[Sequence[Posteriorgram]]]


def predict_threshold(queries: Sequence[Posteriorgram], fsts: Sequence[HypothesisFst],
                      negatives: NegativeSets, cfg: ThresholdConfig = ThresholdConfig(),
                      decoder_cfg: DecoderConfig = DecoderConfig()) -> EnrollmentProfile:
    """Score cross-query positives and negatives, then blend them.

    Args:
      queries: enrollment posteriorgrams; ``fsts[a]`` was built from ``queries[a]``.
      fsts: one hypothesis FST per query.
      negatives: either a flat list shared by every hypothesis (e.g. stored
        general negatives), or one list per query holding the negatives
        generated from that query. In the second form hypothesis ``a`` is
        scored against the negatives of every other query only.
      cfg: blending weight.
      decoder_cfg: passed to :func:`~qbekws.decoder.score_window`.
    """
    A = len(queries)
    if A != len(fsts):
        raise UsageError(f"{A} queries but {len(fsts)} hypotheses")
    if A < 2:
        raise InsufficientQueriesError("threshold prediction needs at least two queries")
    if len(negatives) == 0:
        raise UsageError("need at least one negative")

    per_query = not isinstance(negatives[0], Posteriorgram)
    if per_query:
        if len(negatives) != A:
            raise UsageError(f"{len(negatives)} negative sets for {A} queries")
        sizes = {len(n) for n in negatives}
        if len(sizes) != 1 or 0 in sizes:
            raise UsageError("every query needs the same non-zero number of negatives")
        pools = [[z for b, zs in enumerate(negatives) if b != a for z in zs] for a in range(A)]
    else:
        pools = [list(negatives)] * A

    positive: List[float] = []
    negative: List[float] = []
    for a, fst in enumerate(fsts):
        for b, query in enumerate(queries):
            if b != a:
                positive.append(score_window(fst, query, decoder_cfg).normalized_log_likelihood)
        for z in pools[a]:
            negative.append(score_window(fst, z, decoder_cfg).normalized_log_likelihood)

    delta = blend(positive, negative, cfg.tau)
    if not math.isfinite(delta):
        raise UsageError("threshold is not finite; a hypothesis is longer than some utterance")
    return EnrollmentProfile(tuple(fsts), tuple(positive), tuple(negative), cfg.tau, delta)


def decide(score: float, profile) -> bool:
    """Accept iff ``score >= delta``; ``profile`` may also be a bare threshold."""
    return score >= getattr(profile, "delta", profile)


@dataclass(frozen=True)
class ProfileManifest:
    """Serialized form of a profile; hypotheses are referenced by file name."""

    hypothesis_files: tuple
    positive_scores: tuple
    negative_scores: tuple
    tau: float
    delta: float

    @property
    def num_queries(self) -> int:
        return len(self.hypothesis_files)


def write_profile(profile: EnrollmentProfile, hypothesis_files: Sequence[str]) -> str:
    """PROF1 text: header, A, B, tau, delta, then hypothesis files and score lists."""
    A = profile.num_queries
    if len(hypothesis_files) != A:
        raise UsageError("one hypothesis file name per hypothesis")
    B = profile.negatives_per_hypothesis
    lines = ["PROF1", f"A {A}", f"B {B}", f"tau {profile.tau!r}", f"delta {profile.delta!r}"]
    lines += [f"hyp {name}" for name in hypothesis_files]
    lines += [f"pos {s!r}" for s in profile.positive_scores]
    lines += [f"neg {s!r}" for s in profile.negative_scores]
    return "\n".join(lines) + "\n"


def read_profile(text: str) -> ProfileManifest:
    lines = text.splitlines()
    if not lines or lines[0] != "PROF1":
        raise FormatError("not a PROF1 profile")
    fields = {"hyp": [], "pos": [], "neg": []}
    header = {}
    try:
        for line in lines[1:]:
            key, _, value = line.partition(" ")
            if key in fields:
                fields[key].append(value)
            elif key in ("A", "B", "tau", "delta") and key not in header:
                header[key] = value
            else:
                raise FormatError(f"unexpected profile line {line!r}")
        A, B = int(header["A"]), int(header["B"])
        tau, delta = float(header["tau"]), float(header["delta"])
        pos = tuple(float(v) for v in fields["pos"])
        neg = tuple(float(v) for v in fields["neg"])
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad profile: {e}") from None
    if len(fields["hyp"]) != A or len(pos) != A * (A - 1) or len(neg) != A * B:
        raise FormatError("profile score counts do not match A and B")
    if not math.isfinite(delta):
        raise FormatError("profile delta is not finite")
    return ProfileManifest(tuple(fields["hyp"]), pos, neg, tau, delta)


def load_profile(path: Union[str, Path]) -> ProfileManifest:
    return read_profile(Path(path).read_text())
