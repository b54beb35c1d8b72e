"""Symbol inventory, the CTC collapse mapping and an exact CTC forward score.

The forward score is only used as a reference when testing; the decoding
pipeline itself depends on :func:`collapse` alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import InfeasibleError, MalformedInputError, ValidationError

# 39 context-independent ARPAbet phonemes.
PHONEMES = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH",
    "EH", "ER", "EY", "F", "G", "HH", "IH", "IY", "JH", "K",
    "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH",
    "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
)
SPACE = "sp"
BLANK = "<b>"

LabelSequence = Tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    """Ordered output symbols of the acoustic model.

    ``blank_index`` is the CTC blank; ``space_index`` marks a short pause
    between words and is otherwise an ordinary emitting symbol.
    """

    symbols: Tuple[str, ...]
    blank_index: int
    space_index: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        n = len(self.symbols)
        if len(set(self.symbols)) != n:
            raise ValidationError("alphabet symbol names must be unique")
        for name in self.symbols:
            if not name or not name.isascii() or any(c.isspace() for c in name):
                raise ValidationError(f"invalid symbol name {name!r}")
        if not (0 <= self.blank_index < n and 0 <= self.space_index < n):
            raise ValidationError("blank/space index out of range")
        if self.blank_index == self.space_index:
            raise ValidationError("blank and space must be distinct symbols")

    @classmethod
    def default(cls) -> "Alphabet":
        return cls(PHONEMES + (SPACE, BLANK), blank_index=40, space_index=39)

    @classmethod
    def from_symbols(cls, symbols: Sequence[str], blank: str = BLANK,
                     space: str = SPACE) -> "Alphabet":
        symbols = tuple(symbols)
        try:
            return cls(symbols, symbols.index(blank), symbols.index(space))
        except ValueError:
            raise ValidationError(
                f"alphabet needs both {blank!r} and {space!r} symbols") from None

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def blank(self) -> str:
        return self.symbols[self.blank_index]

    def index(self, name: str) -> int:
        try:
            return self.symbols.index(name)
        except ValueError:
            raise MalformedInputError(f"unknown symbol {name!r}") from None

    def encode(self, names: Iterable[str]) -> LabelSequence:
        return tuple(self.index(n) for n in names)

    def decode(self, labels: Iterable[int]) -> Tuple[str, ...]:
        return tuple(self.symbols[i] for i in labels)


_DEFAULT = Alphabet.default()


def default_alphabet() -> Alphabet:
    return _DEFAULT


def check_labels(labels: Sequence[int], alphabet: Alphabet) -> LabelSequence:
    """Return ``labels`` as a tuple, rejecting blanks and invalid indices."""
    labels = tuple(int(i) for i in labels)
    n = len(alphabet)
    for i in labels:
        if not 0 <= i < n:
            raise MalformedInputError(f"symbol index {i} outside alphabet of size {n}")
        if i == alphabet.blank_index:
            raise MalformedInputError("label sequences may not contain the blank")
    return labels


def collapse(path: Sequence[int], alphabet: Alphabet) -> LabelSequence:
    """Merge repeated symbols, then drop blanks.

    >>> a = Alphabet(("x", "y", "z", "<b>"), blank_index=3, space_index=2)
    >>> collapse([0, 3, 1, 1, 3, 2], a)
    (0, 1, 2)
    """
    if len(path) == 0:
        raise MalformedInputError("cannot collapse an empty frame path")
    n = len(alphabet)
    out = []
    prev = None
    for sym in path:
        sym = int(sym)
        if not 0 <= sym < n:
            raise MalformedInputError(f"symbol index {sym} outside alphabet of size {n}")
        if sym != prev and sym != alphabet.blank_index:
            out.append(sym)
        prev = sym
    return tuple(out)


def min_frames(labels: Sequence[int]) -> int:
    """Shortest frame path that collapses to ``labels``.

    Adjacent equal labels need a blank between them.
    """
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return len(labels) + repeats


def ctc_forward(post, labels: Sequence[int]) -> float:
    """Log of the total probability of every frame path collapsing to ``labels``.

    Args:
      post: a :class:`~qbekws.posteriorgram.Posteriorgram` with normalized rows.
      labels: target label sequence (no blanks; may be empty).

    Returns:
      The log-probability; ``-inf`` if every path has zero probability.
    """
    from .posteriorgram import validate

    violation = validate(post)
    if violation is not None:
        raise ValidationError(str(violation))
    alphabet = post.alphabet
    labels = check_labels(labels, alphabet)
    T = post.num_frames
    if min_frames(labels) > T:
        raise InfeasibleError(
            f"{len(labels)} labels need at least {min_frames(labels)} frames, got {T}")

    blank = alphabet.blank_index
    ext = [blank]
    for lab in labels:
        ext += [lab, blank]
    S = len(ext)
    ext = np.asarray(ext)
    with np.errstate(divide="ignore"):
        logp = np.log(post.frames[:, ext])

    # skip transition s-2 -> s allowed onto a label differing from the one two back
    can_skip = np.zeros(S, dtype=bool)
    for s in range(2, S):
        can_skip[s] = ext[s] != blank and ext[s] != ext[s - 2]

    alpha = np.full(S, -np.inf)
    alpha[0] = logp[0, 0]
    if S > 1:
        alpha[1] = logp[0, 1]
    for t in range(1, T):
        prev = alpha
        alpha = prev.copy()
        alpha[1:] = np.logaddexp(alpha[1:], prev[:-1])
        alpha[2:] = np.where(can_skip[2:], np.logaddexp(alpha[2:], prev[:-2]), alpha[2:])
        alpha = alpha + logp[t]
    if S == 1:
        return float(alpha[0])
    return float(np.logaddexp(alpha[-1], alpha[-2]))
