"""Keyword scoring of a test posteriorgram against a hypothesis FST.

The search is a Viterbi pass over the 2K FST states with a free start
frame: at every frame a new path may enter ``E_0`` with probability one.
A path scores

    sum of log 1/3 per transition + sum of log posteriors of the emitted symbols

and must finish at the last position (``E_{K-1}`` or ``B_{K-1}``) on the
final frame of the window. The raw log-likelihood is maximized; the
winning path's score is then divided by the number of frames it spends in
emitting states. Ties on the raw score go to the path with more emitting
frames, then to the later start frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .enrollment import LOG_THIRD, HypothesisFst
from .errors import UsageError
from .posteriorgram import Posteriorgram

NEG_INF = float("-inf")


@dataclass(frozen=True)
class DecoderConfig:
    beam_width: Optional[int] = None  # None = exact search
    log_floor: float = math.log(1e-10)
    streaming_stride: int = 1

    def __post_init__(self):
        if self.beam_width is not None and self.beam_width < 1:
            raise UsageError("beam_width must be >= 1")
        if self.streaming_stride < 1:
            raise UsageError("streaming_stride must be >= 1")


@dataclass(frozen=True)
class DetectionScore:
    """Best alignment of a hypothesis ending at ``end_frame``.

    ``alignment`` lists the FST state occupied at each frame from
    ``start_frame`` to ``end_frame``. When no alignment fits, both scores
    are ``-inf`` and ``non_blank_frames`` is 0.
    """

    normalized_log_likelihood: float
    raw_log_likelihood: float
    start_frame: int
    end_frame: int
    non_blank_frames: int
    alignment: Tuple[int, ...] = field(default=(), compare=False, repr=False)

    @property
    def found(self) -> bool:
        return self.non_blank_frames > 0

    @classmethod
    def infeasible(cls, end_frame: int) -> "DetectionScore":
        return cls(NEG_INF, NEG_INF, end_frame, end_frame, 0)


def emission_logs(post: Posteriorgram, log_floor: float) -> np.ndarray:
    """Log posteriors with every entry clamped to at least ``log_floor``."""
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(post.frames), log_floor)


def _state_emissions(fst: HypothesisFst, post: Posteriorgram, cfg: DecoderConfig) -> np.ndarray:
    if fst.alphabet != post.alphabet:
        raise UsageError("posteriorgram and hypothesis use different alphabets")
    return emission_logs(post, cfg.log_floor)[:, fst.emission_symbols()]


Cell = Tuple[float, int, int]  # (raw log-likelihood, emitting frames, start frame)
DEAD: Cell = (NEG_INF, 0, -1)


def _prune(cells: List[Cell], beam: Optional[int]) -> List[Cell]:
    if beam is None or beam >= len(cells):
        return cells
    # stable sort: equal cells keep state order
    ranked = sorted(range(len(cells)), key=cells.__getitem__, reverse=True)
    out = list(cells)
    for s in ranked[beam:]:
        out[s] = DEAD
    return out


def _viterbi(emit: np.ndarray, beam: Optional[int]) -> Iterator[Tuple[List[Cell], List[int]]]:
    """Yield the best (raw, emitting frames, start) per state and backpointers, frame by frame.

    Cells compare lexicographically, which implements the tie-break order.
    Backpointer -1 marks a path that started at this frame.
    """
    T, S = emit.shape
    K = S // 2
    rows = emit.tolist()
    cells = [DEAD] * S
    cells[0] = (rows[0][0], 1, 0)
    cells = _prune(cells, beam)
    yield cells, [-1] * S

    for t in range(1, T):
        e = rows[t]
        new = [DEAD] * S
        back = [-1] * S
        for l in range(K):
            es, eb = 2 * l, 2 * l + 1
            emit_e, emit_b = e[es], e[eb]
            if l == 0:
                best, arg = (emit_e, 1, t), -1
                sources = (es, eb)
            else:
                best, arg = DEAD, -1
                sources = (es, eb, es - 2, es - 1)
            for src in sources:
                raw, nb, t0 = cells[src]
                cand = (raw + LOG_THIRD + emit_e, nb + 1, t0)
                if cand > best:
                    best, arg = cand, src
            new[es], back[es] = best, arg

            raw, nb, t0 = cells[es]
            best, arg = (raw + LOG_THIRD + emit_b, nb, t0), es
            raw, nb, t0 = cells[eb]
            cand = (raw + LOG_THIRD + emit_b, nb, t0)
            if cand > best:
                best, arg = cand, eb
            new[eb], back[eb] = best, arg
        cells = _prune(new, beam)
        yield cells, back


def _final(cells: List[Cell], K: int) -> Optional[int]:
    """State index of the better final state, or None if neither is reachable."""
    e, b = 2 * (K - 1), 2 * (K - 1) + 1
    if cells[e][0] == NEG_INF and cells[b][0] == NEG_INF:
        return None
    return b if cells[b] > cells[e] else e


def _make_score(cell: Cell, end: int, alignment=()) -> DetectionScore:
    raw, nb, t0 = cell
    return DetectionScore(raw / nb, raw, t0, end, nb, tuple(alignment))


def score_window(fst: HypothesisFst, post: Posteriorgram,
                 cfg: DecoderConfig = DecoderConfig()) -> DetectionScore:
    """Best keyword alignment ending on the last frame of ``post``."""
    emit = _state_emissions(fst, post, cfg)
    T = emit.shape[0]
    K = fst.num_positions
    if K > T:
        return DetectionScore.infeasible(T - 1)
    pointers = []
    for cells, back in _viterbi(emit, cfg.beam_width):
        pointers.append(back)
    state = _final(cells, K)
    if state is None:
        return DetectionScore.infeasible(T - 1)

    path = [state]
    t = T - 1
    while pointers[t][path[-1]] != -1:
        path.append(pointers[t][path[-1]])
        t -= 1
    path.reverse()
    return _make_score(cells[state], T - 1, path)


def spot_stream(fst: HypothesisFst, post: Posteriorgram,
                cfg: DecoderConfig = DecoderConfig()) -> List[DetectionScore]:
    """Score every prefix of a stream in one pass.

    One score per end frame ``stride-1, 2*stride-1, ...``; each equals
    :func:`score_window` on the prefix ending there (without the alignment).
    """
    emit = _state_emissions(fst, post, cfg)
    K = fst.num_positions
    stride = cfg.streaming_stride
    out = []
    for t, (cells, _) in enumerate(_viterbi(emit, cfg.beam_width)):
        if (t + 1) % stride:
            continue
        state = _final(cells, K) if t + 1 >= K else None
        out.append(DetectionScore.infeasible(t) if state is None
                   else _make_score(cells[state], t))
    return out


def score_averaged(fsts: Sequence[HypothesisFst], post: Posteriorgram,
                   cfg: DecoderConfig = DecoderConfig()) -> float:
    """Mean normalized score over several enrollment hypotheses."""
    if not fsts:
        raise UsageError("need at least one hypothesis FST")
    scores = [score_window(f, post, cfg).normalized_log_likelihood for f in fsts]
    if any(s == NEG_INF for s in scores):
        return NEG_INF
    return math.fsum(scores) / len(scores)
