"""Posteriorgram container, validation, PGRAM v1 file I/O and a synthetic generator.

PGRAM v1 layout (little-endian)::

    b"PGM1" | u32 T | u32 N | u32 frame_shift_us | u32 label_block_len
    | label block: N symbol names joined by "\\n" (ASCII)
    | T*N float32 probabilities, row-major
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import FormatError, UsageError, ValidationError
from .phonetics import Alphabet, check_labels, default_alphabet

MAGIC = b"PGM1"
_HEADER = struct.Struct("<4sIIII")
ROW_TOLERANCE = 1e-4
DEFAULT_FRAME_SHIFT_US = 10_000


@dataclass(frozen=True, eq=False)
class Posteriorgram:
    """T x N matrix of per-frame posteriors over ``alphabet``.

    Construction checks only the shape; use :func:`validate` for the
    probability constraints.
    """

    frames: np.ndarray
    alphabet: Alphabet = field(default_factory=default_alphabet)
    frame_shift_us: int = DEFAULT_FRAME_SHIFT_US

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValidationError(f"posteriorgram must be a non-empty 2-D matrix, got {frames.shape}")
        if frames.shape[1] != len(self.alphabet):
            raise ValidationError(
                f"{frames.shape[1]} columns but alphabet has {len(self.alphabet)} symbols")
        if self.frame_shift_us <= 0:
            raise ValidationError("frame shift must be positive")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def duration_s(self) -> float:
        return self.num_frames * self.frame_shift_us / 1e6

    def __eq__(self, other):
        if not isinstance(other, Posteriorgram):
            return NotImplemented
        return (self.alphabet == other.alphabet
                and self.frame_shift_us == other.frame_shift_us
                and np.array_equal(self.frames, other.frames))

    __hash__ = None

    def argmax_path(self) -> np.ndarray:
        # np.argmax returns the first maximum, i.e. the lowest symbol index on ties
        return np.argmax(self.frames, axis=1)

    def with_frames(self, frames) -> "Posteriorgram":
        return Posteriorgram(frames, self.alphabet, self.frame_shift_us)


@dataclass(frozen=True)
class Violation:
    row: int
    kind: str  # "range" or "normalization"
    detail: str

    def __str__(self):
        return f"row {self.row}: {self.kind} violation ({self.detail})"


def validate(post: Posteriorgram, tol: float = ROW_TOLERANCE) -> Optional[Violation]:
    """Return the first row breaking the probability constraints, or None."""
    frames = post.frames
    bad_range = ~np.all((frames >= 0.0) & (frames <= 1.0), axis=1)
    sums = frames.sum(axis=1)
    bad_norm = ~(np.abs(sums - 1.0) <= tol)
    bad = np.flatnonzero(bad_range | bad_norm)
    if bad.size == 0:
        return None
    row = int(bad[0])
    if bad_range[row]:
        col = int(np.flatnonzero((frames[row] < 0) | (frames[row] > 1) | np.isnan(frames[row]))[0])
        return Violation(row, "range", f"entry {frames[row, col]!r} at column {col}")
    return Violation(row, "normalization", f"row sums to {sums[row]!r}")


def write_pgram(post: Posteriorgram) -> bytes:
    labels = "\n".join(post.alphabet.symbols).encode("ascii")
    T, N = post.frames.shape
    header = _HEADER.pack(MAGIC, T, N, post.frame_shift_us, len(labels))
    return header + labels + post.frames.astype("<f4").tobytes()


def read_pgram(data: bytes) -> Posteriorgram:
    """Parse PGRAM v1 bytes.

    Rows must be valid distributions within ``ROW_TOLERANCE``; stored values
    are kept as-is so that reading and writing are exact inverses.
    """
    if len(data) < _HEADER.size:
        raise FormatError("truncated header")
    magic, T, N, shift, label_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if T < 1 or N < 1:
        raise FormatError(f"empty matrix T={T} N={N}")
    off = _HEADER.size
    if len(data) < off + label_len:
        raise FormatError("truncated label block")
    try:
        names = data[off:off + label_len].decode("ascii").split("\n")
    except UnicodeDecodeError:
        raise FormatError("label block is not ASCII") from None
    if len(names) != N:
        raise FormatError(f"label block lists {len(names)} symbols, header says {N}")
    off += label_len
    expected = off + 4 * T * N
    if len(data) != expected:
        raise FormatError(f"payload is {len(data) - off} bytes, expected {4 * T * N}")
    frames = np.frombuffer(data, dtype="<f4", count=T * N, offset=off).reshape(T, N)
    try:
        alphabet = Alphabet.from_symbols(names)
        post = Posteriorgram(frames.astype(np.float64), alphabet, shift)
    except ValidationError as e:
        raise FormatError(str(e)) from None
    violation = validate(post)
    if violation is not None:
        raise ValidationError(str(violation))
    return post


def load_pgram(path) -> Posteriorgram:
    with open(path, "rb") as f:
        return read_pgram(f.read())


def save_pgram(post: Posteriorgram, path) -> None:
    with open(path, "wb") as f:
        f.write(write_pgram(post))


@dataclass(frozen=True)
class SynthSpec:
    """Schedule for a synthetic posteriorgram.

    Each label holds ``frames_per_label`` frames; consecutive labels are
    separated by ``blank_frames_between`` blank frames (at least one when the
    two labels are equal, so the sequence survives collapsing).
    """

    labels: Sequence[int]
    frames_per_label: int = 3
    blank_frames_between: int = 1
    peak_mass: float = 0.9
    seed: int = 0
    alphabet: Alphabet = field(default_factory=default_alphabet)
    frame_shift_us: int = DEFAULT_FRAME_SHIFT_US

    def __post_init__(self):
        object.__setattr__(self, "labels", check_labels(self.labels, self.alphabet))
        if not self.labels:
            raise UsageError("synthetic spec needs at least one label")
        if self.frames_per_label < 1:
            raise UsageError("frames_per_label must be positive")
        if self.blank_frames_between < 0:
            raise UsageError("blank_frames_between must be non-negative")
        if not (1.0 / len(self.alphabet) < self.peak_mass <= 1.0):
            raise UsageError("peak_mass must lie in (1/N, 1]")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")

    def schedule(self) -> np.ndarray:
        """Per-frame dominant symbol."""
        blank = self.alphabet.blank_index
        path = []
        for i, lab in enumerate(self.labels):
            if i > 0:
                gap = self.blank_frames_between
                if gap == 0 and lab == self.labels[i - 1]:
                    gap = 1
                path += [blank] * gap
            path += [lab] * self.frames_per_label
        return np.asarray(path, dtype=np.int64)


def synthesize(spec: SynthSpec) -> Posteriorgram:
    """Build a posteriorgram whose per-frame argmax follows ``spec.schedule()``.

    The dominant symbol gets ``peak_mass``; the rest is spread over the other
    symbols around the uniform share with a seeded perturbation kept small
    enough that no residual entry reaches the peak.
    """
    path = spec.schedule()
    T, N = len(path), len(spec.alphabet)
    rng = np.random.default_rng(spec.seed)
    peak = spec.peak_mass
    share = (1.0 - peak) / (N - 1)
    spread = 0.5 * min(share, peak - share)

    noise = rng.uniform(-1.0, 1.0, size=(T, N - 1))
    noise -= noise.mean(axis=1, keepdims=True)
    scale = np.abs(noise).max(axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    residual = share + spread * noise / scale

    frames = np.empty((T, N))
    for t, sym in enumerate(path):
        frames[t, sym] = peak
        frames[t, np.arange(N) != sym] = residual[t]
    frames /= frames.sum(axis=1, keepdims=True)
    return Posteriorgram(frames, spec.alphabet, spec.frame_shift_us)


def concat(posts: Sequence[Posteriorgram]) -> Posteriorgram:
    """Join posteriorgrams along time; all must share alphabet and frame shift."""
    first = posts[0]
    for p in posts[1:]:
        if p.alphabet != first.alphabet or p.frame_shift_us != first.frame_shift_us:
            raise UsageError("cannot concatenate posteriorgrams with different metadata")
    return first.with_frames(np.vstack([p.frames for p in posts]))
