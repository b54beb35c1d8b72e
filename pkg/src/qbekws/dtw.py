"""Subsequence DTW between a query and a test posteriorgram.

Frame cost is the KL divergence between the two (floored, renormalized)
distributions. The query must be matched completely while the match may
start and end anywhere in the test. Steps are (1,1), (1,0) and (0,1) in
(query, test) index space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import UsageError
from .posteriorgram import Posteriorgram

PROB_FLOOR = 1e-10

KL_QUERY_TEST = "query_test"  # D(query || test)
KL_TEST_QUERY = "test_query"  # D(test || query)
NORM_PATH = "path"            # number of cells on the warping path
NORM_TEST_SPAN = "test_span"  # test frames covered by the path


@dataclass(frozen=True)
class DtwConfig:
    kl_direction: str = KL_QUERY_TEST
    normalization: str = NORM_PATH

    def __post_init__(self):
        if self.kl_direction not in (KL_QUERY_TEST, KL_TEST_QUERY):
            raise UsageError(f"unknown KL direction {self.kl_direction!r}")
        if self.normalization not in (NORM_PATH, NORM_TEST_SPAN):
            raise UsageError(f"unknown DTW normalization {self.normalization!r}")


@dataclass(frozen=True)
class DtwResult:
    normalized_distance: float
    accumulated_distance: float
    path_length: int
    test_start: int
    test_end: int
    path: Tuple[Tuple[int, int], ...] = field(default=(), compare=False, repr=False)


def _floored(frames: np.ndarray) -> np.ndarray:
    p = np.maximum(frames, PROB_FLOOR)
    return p / p.sum(axis=1, keepdims=True)


def kl_cost_matrix(query: Posteriorgram, test: Posteriorgram,
                   direction: str = KL_QUERY_TEST) -> np.ndarray:
    """Matrix of frame-pair KL divergences, shape (query frames, test frames)."""
    if query.alphabet != test.alphabet:
        raise UsageError("query and test posteriorgrams use different alphabets")
    q, t = _floored(query.frames), _floored(test.frames)
    log_q, log_t = np.log(q), np.log(t)
    # element-wise form keeps the cost of identical rows exactly zero
    if direction == KL_QUERY_TEST:
        cost = np.sum(q[:, None, :] * (log_q[:, None, :] - log_t[None, :, :]), axis=2)
    elif direction == KL_TEST_QUERY:
        cost = np.sum(t[None, :, :] * (log_t[None, :, :] - log_q[:, None, :]), axis=2)
    else:
        raise UsageError(f"unknown KL direction {direction!r}")
    # rounding can leave tiny negatives for nearly equal rows
    return np.maximum(cost, 0.0)


def sdtw(query: Posteriorgram, test: Posteriorgram, cfg: DtwConfig = DtwConfig()) -> DtwResult:
    """Best subsequence alignment of ``query`` inside ``test``.

    For every test end frame the minimum-cost path is found (ties: longer
    path, then later start); it is then normalized and the end frame with
    the smallest normalized cost wins (ties: earliest end).
    """
    cost = kl_cost_matrix(query, test, cfg.kl_direction)
    n, m = cost.shape
    rows = cost.tolist()
    # cell = (accumulated, -length, -start); the smallest tuple wins
    cells = []
    moves = []  # 0 start, 1 diag, 2 from (i-1,j), 3 from (i,j-1)

    c = rows[0]
    cur, mv = [(c[0], -1, 0)], [0]
    for j in range(1, m):
        best, move = (c[j], -1, -j), 0
        acc, nlen, nstart = cur[j - 1]
        cand = (acc + c[j], nlen - 1, nstart)
        if cand < best:
            best, move = cand, 3
        cur.append(best)
        mv.append(move)
    cells.append(cur)
    moves.append(mv)

    for i in range(1, n):
        c, prev = rows[i], cur
        acc, nlen, nstart = prev[0]
        cur, mv = [(acc + c[0], nlen - 1, nstart)], [2]
        left = cur[0]
        for j in range(1, m):
            cj = c[j]
            acc, nlen, nstart = prev[j]
            best, move = (acc + cj, nlen - 1, nstart), 2
            acc, nlen, nstart = prev[j - 1]
            cand = (acc + cj, nlen - 1, nstart)
            if cand < best:
                best, move = cand, 1
            acc, nlen, nstart = left
            cand = (acc + cj, nlen - 1, nstart)
            if cand < best:
                best, move = cand, 3
            cur.append(best)
            mv.append(move)
            left = best
        cells.append(cur)
        moves.append(mv)

    acc_last = np.array([cell[0] for cell in cur])
    length_last = -np.array([cell[1] for cell in cur])
    start_last = -np.array([cell[2] for cell in cur])
    if cfg.normalization == NORM_PATH:
        denom = length_last
    else:
        denom = np.arange(m) - start_last + 1
    normalized = acc_last / denom
    end = int(np.argmin(normalized))

    path = [(n - 1, end)]
    i, j = n - 1, end
    while moves[i][j] != 0:
        move = moves[i][j]
        if move == 1:
            i, j = i - 1, j - 1
        elif move == 2:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return DtwResult(float(normalized[end]), float(acc_last[end]), int(length_last[end]),
                     int(start_last[end]), end, tuple(path))


def sdtw_score(query: Posteriorgram, test: Posteriorgram, cfg: DtwConfig = DtwConfig()) -> float:
    """Negated normalized distance, so that higher means more keyword-like."""
    return -sdtw(query, test, cfg).normalized_distance
