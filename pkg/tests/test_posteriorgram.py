import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_pgram, toy_alphabet
from qbekws.enrollment import max_decode
from qbekws.errors import FormatError, UsageError, ValidationError
from qbekws.phonetics import collapse
from qbekws.posteriorgram import (
    Posteriorgram, SynthSpec, concat, read_pgram, synthesize, validate, write_pgram,
)


class TestValidate:
    def test_one_hot_ok(self, abc):
        assert validate(Posteriorgram(np.eye(4), abc)) is None

    def test_row_sum(self, abc):
        frames = np.eye(4)
        frames[2] = [0.3, 0.3, 0.2, 0.1]
        v = validate(Posteriorgram(frames, abc))
        assert v.row == 2 and v.kind == "normalization"

    def test_range(self, abc):
        frames = np.eye(4)
        frames[1] = [1.2, -0.2, 0.0, 0.0]
        v = validate(Posteriorgram(frames, abc))
        assert v.row == 1 and v.kind == "range"

    def test_first_violation_reported(self, abc):
        frames = np.full((3, 4), 0.5)
        assert validate(Posteriorgram(frames, abc)).row == 0

    def test_shape_checked(self, abc):
        with pytest.raises(ValidationError):
            Posteriorgram(np.ones((2, 3)) / 3, abc)


def _hand_built(magic=b"PGM1", names=b"a\nsp\n<b>", n=3, floats=None, extra=b""):
    floats = floats if floats is not None else [0.5, 0.25, 0.25, 0.0, 0.0, 1.0]
    head = struct.pack("<4sIIII", magic, 2, n, 10000, len(names))
    return head + names + struct.pack("<6f", *floats) + extra


class TestPgramFormat:
    def test_hand_built(self):
        post = read_pgram(_hand_built())
        np.testing.assert_array_equal(post.frames, [[0.5, 0.25, 0.25], [0.0, 0.0, 1.0]])
        assert post.alphabet.symbols == ("a", "sp", "<b>")
        assert post.alphabet.blank_index == 2
        assert post.frame_shift_us == 10000

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            read_pgram(_hand_built(magic=b"XXXX"))

    def test_truncated(self):
        with pytest.raises(FormatError):
            read_pgram(_hand_built()[:-3])
        with pytest.raises(FormatError):
            read_pgram(b"PGM1\x01")

    def test_trailing_bytes(self):
        with pytest.raises(FormatError):
            read_pgram(_hand_built(extra=b"\0\0\0\0"))

    def test_label_count_mismatch(self):
        with pytest.raises(FormatError):
            read_pgram(_hand_built(names=b"a\nb\nsp\n<b>"))

    def test_non_distribution_rejected(self):
        with pytest.raises(ValidationError):
            read_pgram(_hand_built(floats=[0.5, 0.2, 0.2, 0.0, 0.0, 1.0]))

    def test_float32_drift_tolerated(self):
        post = read_pgram(_hand_built(floats=[0.5, 0.25, 0.25001, 0.0, 0.0, 1.0]))
        assert post.frames[0, 2] == np.float32(0.25001)

    def test_round_trip_random(self):
        rng = np.random.default_rng(7)
        for case in range(1000):
            n = int(rng.integers(3, 8))
            alpha = toy_alphabet(n)
            post = random_pgram(rng, int(rng.integers(1, 20)), alpha)
            data = write_pgram(post)
            back = read_pgram(data)
            np.testing.assert_array_equal(back.frames, post.frames.astype(np.float32))
            assert back.alphabet == post.alphabet
            assert write_pgram(back) == data
            assert read_pgram(write_pgram(back)) == back


class TestSynthesize:
    def test_one_hot_schedule(self, phones):
        a, b = phones.encode(["AA", "B"])
        post = synthesize(SynthSpec([a, b], frames_per_label=3, blank_frames_between=1,
                                    peak_mass=1.0, seed=3))
        blank = phones.blank_index
        assert post.argmax_path().tolist() == [a, a, a, blank, b, b, b]
        assert np.all(post.frames.max(axis=1) == 1.0)

    def test_deterministic(self, phones):
        spec = SynthSpec(phones.encode("HH EY".split()), seed=7)
        assert synthesize(spec) == synthesize(spec)
        other = SynthSpec(phones.encode("HH EY".split()), seed=8)
        assert synthesize(spec) != synthesize(other)

    def test_rows_valid(self, phones):
        post = synthesize(SynthSpec(phones.encode("S N AE P".split()), peak_mass=0.6, seed=1))
        assert validate(post) is None

    def test_repeats_get_a_separator(self, phones):
        aa = phones.index("AA")
        post = synthesize(SynthSpec([aa, aa], blank_frames_between=0, peak_mass=1.0))
        assert collapse(post.argmax_path(), phones) == (aa, aa)

    def test_peak_must_beat_uniform(self, phones):
        with pytest.raises(UsageError):
            SynthSpec([0], peak_mass=1 / 41)

    @settings(max_examples=500, deadline=None)
    @given(labels=st.lists(st.integers(0, 39), min_size=1, max_size=12),
           fpl=st.integers(1, 4), gap=st.integers(0, 3),
           peak=st.floats(0.0, 1.0).map(lambda x: 1 / 41 + 1e-6 + x * (1 - 1 / 41 - 1e-6)),
           seed=st.integers(0, 2**64 - 1))
    def test_max_decode_recovers_labels(self, labels, fpl, gap, peak, seed):
        spec = SynthSpec(labels, fpl, gap, peak, seed)
        post = synthesize(spec)
        assert validate(post) is None
        assert max_decode(post).labels == tuple(labels)


def test_concat(phones):
    a = synthesize(SynthSpec([0], seed=1))
    b = synthesize(SynthSpec([1], seed=2))
    joined = concat([a, b])
    assert joined.num_frames == a.num_frames + b.num_frames
    with pytest.raises(UsageError):
        concat([a, Posteriorgram(np.eye(4), toy_alphabet(4))])
