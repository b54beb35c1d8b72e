"""Query-specific negatives: split a query into parts and reorder them.

In the waveform domain, consecutive parts are joined by overlap-add over
``overlap`` samples: the tail of the left part fades out with
``(overlap - k) / overlap`` and the head of the right part fades in with
``k / overlap`` for ``k = 0 .. overlap-1``. Each junction therefore removes
``overlap`` samples from the total length.
"""

from __future__ import annotations

import io
import itertools
import logging
import wave
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import UnsupportedFormatError, UsageError, FormatError
from .posteriorgram import Posteriorgram

logger = logging.getLogger(__name__)

DEFAULT_OVERLAP = 16
DEFAULT_PARTS = 3
PCM_SCALE = 32768.0
MAX_SAMPLE = 32767 / PCM_SCALE


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio as floats in [-1, 1); 16-bit PCM maps to ``value / 32768``."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise UsageError("waveform must be one-dimensional")
        if self.sample_rate <= 0:
            raise UsageError("sample rate must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)

    __hash__ = None

    @classmethod
    def from_pcm16(cls, pcm, sample_rate: int) -> "Waveform":
        return cls(np.asarray(pcm, dtype=np.int16) / PCM_SCALE, sample_rate)

    def to_pcm16(self) -> np.ndarray:
        return np.clip(np.round(self.samples * PCM_SCALE), -32768, 32767).astype(np.int16)


def shuffle_orders(parts: int = DEFAULT_PARTS) -> List[Tuple[int, ...]]:
    """Every non-identity ordering of ``parts`` segments, lexicographic."""
    identity = tuple(range(parts))
    return [p for p in itertools.permutations(range(parts)) if p != identity]


def fade_ramps(overlap: int = DEFAULT_OVERLAP) -> Tuple[np.ndarray, np.ndarray]:
    k = np.arange(overlap)
    return (overlap - k) / overlap, k / overlap


def split_points(length: int, parts: int = DEFAULT_PARTS) -> List[int]:
    """Boundaries of equal-size parts; the remainder goes to the last part."""
    size = length // parts
    return [size * i for i in range(parts + 1)][:-1] + [length]


def crossfade_concat(segments: Sequence[np.ndarray], overlap: int = DEFAULT_OVERLAP
                     ) -> Tuple[np.ndarray, int]:
    """Overlap-add ``segments`` in order and clamp to [-1, 1).

    Returns the joined samples and the number of clamped samples.
    """
    fade_out, fade_in = fade_ramps(overlap)
    out = np.array(segments[0], dtype=np.float64)
    for seg in segments[1:]:
        seg = np.asarray(seg, dtype=np.float64)
        if overlap:
            joint = out[-overlap:] * fade_out + seg[:overlap] * fade_in
            out = np.concatenate([out[:-overlap], joint, seg[overlap:]])
        else:
            out = np.concatenate([out, seg])
    clipped = int(np.count_nonzero((out < -1.0) | (out > MAX_SAMPLE)))
    return np.clip(out, -1.0, MAX_SAMPLE), clipped


def shuffle_waveform(wave_in: Waveform, order: Sequence[int], overlap: int = DEFAULT_OVERLAP
                     ) -> Tuple[Waveform, int]:
    bounds = split_points(len(wave_in), len(order))
    parts = [wave_in.samples[bounds[i]:bounds[i + 1]] for i in range(len(order))]
    if min(len(p) for p in parts) <= overlap:
        raise UsageError(
            f"{len(wave_in)} samples is too short for {len(order)} parts with overlap {overlap}")
    samples, clipped = crossfade_concat([parts[i] for i in order], overlap)
    return Waveform(samples, wave_in.sample_rate), clipped


def generate_negatives(wave_in: Waveform, overlap: int = DEFAULT_OVERLAP,
                       parts: int = DEFAULT_PARTS) -> List[Waveform]:
    """All shuffled versions of ``wave_in`` (5 for the default three parts).

    Outputs follow :func:`shuffle_orders`; each has
    ``len(wave_in) - (parts - 1) * overlap`` samples.
    """
    if parts < 2:
        raise UsageError("need at least two parts to shuffle")
    if overlap < 0:
        raise UsageError("overlap must be non-negative")
    if len(wave_in) // parts <= overlap:
        raise UsageError(
            f"{len(wave_in)} samples is too short for {parts} parts with overlap {overlap}")
    out = []
    for order in shuffle_orders(parts):
        neg, clipped = shuffle_waveform(wave_in, order, overlap)
        if clipped:
            logger.warning("order %s: clamped %d samples", order, clipped)
        out.append(neg)
    return out


def generate_negatives_pgram(post: Posteriorgram, parts: int = DEFAULT_PARTS) -> List[Posteriorgram]:
    """Frame-block analogue of :func:`generate_negatives` without cross-fades."""
    if parts < 2:
        raise UsageError("need at least two parts to shuffle")
    T = post.num_frames
    if T < parts:
        raise UsageError(f"{T} frames cannot be split into {parts} parts")
    bounds = split_points(T, parts)
    blocks = [post.frames[bounds[i]:bounds[i + 1]] for i in range(parts)]
    return [post.with_frames(np.vstack([blocks[i] for i in order]))
            for order in shuffle_orders(parts)]


def read_wav(data: bytes) -> Waveform:
    """Decode a RIFF/WAVE file holding 16-bit mono PCM."""
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            if w.getnchannels() != 1:
                raise UnsupportedFormatError(f"{w.getnchannels()} channels; only mono is supported")
            if w.getsampwidth() != 2:
                raise UnsupportedFormatError(f"{8 * w.getsampwidth()}-bit samples; only 16-bit PCM")
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except wave.Error as e:
        raise UnsupportedFormatError(str(e)) from None
    except EOFError:
        raise FormatError("truncated WAV file") from None
    if len(raw) % 2:
        raise FormatError("truncated sample data")
    return Waveform.from_pcm16(np.frombuffer(raw, dtype="<i2"), rate)


def write_wav(wave_out: Waveform) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(wave_out.sample_rate)
        w.writeframes(wave_out.to_pcm16().astype("<i2").tobytes())
    return buf.getvalue()
