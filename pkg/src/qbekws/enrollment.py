"""Query enrollment: max-decoding to a hypothesis and the left-to-right FST layout.

State layout of a hypothesis FST with K labels: position ``l`` (0-based)
owns an emitting state ``E_l`` at index ``2*l`` and a blank-hold state
``B_l`` at index ``2*l + 1``. From either state of position ``l`` the
allowed moves are advance to ``E_{l+1}``, stay in ``E_l``, or hold in
``B_l``, each weighted 1/3. The last position has no advance and the
remaining two moves keep their 1/3 weight (no renormalization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

from .errors import EmptyHypothesisError, FormatError, UsageError
from .phonetics import Alphabet, LabelSequence, check_labels, collapse
from .posteriorgram import Posteriorgram

LOG_THIRD = math.log(1.0 / 3.0)

ADVANCE, STAY, HOLD = "advance", "stay", "blank"


@dataclass(frozen=True)
class Hypothesis:
    labels: LabelSequence
    alphabet: Alphabet
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "labels", check_labels(self.labels, self.alphabet))
        if not self.labels:
            raise UsageError("a hypothesis needs at least one label")

    def __len__(self):
        return len(self.labels)

    def text(self, sep: str = ".") -> str:
        """Human-readable form; the space symbol renders as a single space."""
        names = [" " if i == self.alphabet.space_index else self.alphabet.symbols[i]
                 for i in self.labels]
        return sep.join(names)


@dataclass(frozen=True)
class Transition:
    src: int
    dst: int
    kind: str
    log_weight: float


@dataclass(frozen=True)
class HypothesisFst:
    hypothesis: Hypothesis
    transitions: Tuple[Transition, ...]

    @property
    def num_positions(self) -> int:
        return len(self.hypothesis.labels)

    @property
    def num_states(self) -> int:
        return 2 * self.num_positions

    @property
    def alphabet(self) -> Alphabet:
        return self.hypothesis.alphabet

    @property
    def initial_state(self) -> int:
        return 0

    @property
    def final_states(self) -> Tuple[int, int]:
        k = self.num_positions - 1
        return (2 * k, 2 * k + 1)

    @staticmethod
    def position(state: int) -> int:
        return state // 2

    @staticmethod
    def is_blank_state(state: int) -> bool:
        return state % 2 == 1

    def emission_symbols(self) -> List[int]:
        """Symbol emitted by each state, in state order."""
        blank = self.alphabet.blank_index
        out = []
        for lab in self.hypothesis.labels:
            out += [lab, blank]
        return out

    def successors(self, state: int) -> List[Transition]:
        return [tr for tr in self.transitions if tr.src == state]


def max_decode(post: Posteriorgram, source_id: str = "") -> Hypothesis:
    """Collapse the per-frame argmax path (ties go to the lowest symbol index)."""
    labels = collapse(post.argmax_path(), post.alphabet)
    if not labels:
        raise EmptyHypothesisError(f"query {source_id!r} max-decodes to blanks only")
    return Hypothesis(labels, post.alphabet, source_id)


def build_fst(hyp: Hypothesis) -> HypothesisFst:
    K = len(hyp.labels)
    transitions = []
    for l in range(K):
        for src in (2 * l, 2 * l + 1):
            if l + 1 < K:
                transitions.append(Transition(src, 2 * (l + 1), ADVANCE, LOG_THIRD))
            transitions.append(Transition(src, 2 * l, STAY, LOG_THIRD))
            transitions.append(Transition(src, 2 * l + 1, HOLD, LOG_THIRD))
    return HypothesisFst(hyp, tuple(transitions))


def write_hypothesis(hyp: Hypothesis) -> str:
    if "\n" in hyp.source_id:
        raise UsageError("source id may not contain newlines")
    lines = ["HYP1", hyp.source_id] + list(hyp.alphabet.decode(hyp.labels))
    return "\n".join(lines) + "\n"


def read_hypothesis(text: str, alphabet: Alphabet) -> Hypothesis:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 3 or lines[0] != "HYP1":
        raise FormatError("not a HYP1 manifest")
    try:
        labels = alphabet.encode(lines[2:])
        return Hypothesis(labels, alphabet, lines[1])
    except ValueError as e:
        raise FormatError(f"bad hypothesis manifest: {e}") from None
