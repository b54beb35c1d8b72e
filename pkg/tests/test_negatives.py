import io
import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbekws.errors import FormatError, UnsupportedFormatError, UsageError
from qbekws.negatives import (
    Waveform, crossfade_concat, fade_ramps, generate_negatives, generate_negatives_pgram,
    read_wav, shuffle_orders, split_points, write_wav,
)
from qbekws.posteriorgram import SynthSpec, synthesize


def _wav_bytes(channels=1, width=2, rate=16000, frames=b"\0\0" * 4):
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(frames)
    return buf.getvalue()


class TestShuffle:
    def test_orders(self):
        assert shuffle_orders() == [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]

    def test_ramps_sum_to_one(self):
        out, inn = fade_ramps(16)
        assert np.all(out + inn == 1.0)
        assert out[0] == 1.0 and inn[0] == 0.0

    def test_split_points(self):
        assert split_points(3000) == [0, 1000, 2000, 3000]
        assert split_points(3002) == [0, 1000, 2000, 3002]

    def test_five_outputs_with_expected_length(self, rng):
        wave_in = Waveform(rng.uniform(-0.5, 0.5, 3000), 16000)
        negs = generate_negatives(wave_in)
        assert len(negs) == 5
        assert all(len(n) == 2968 and n.sample_rate == 16000 for n in negs)

    def test_constant_stays_constant(self):
        negs = generate_negatives(Waveform(np.full(3000, 0.25), 8000))
        for n in negs:
            np.testing.assert_allclose(n.samples, 0.25, rtol=0, atol=1e-15)

    def test_content_outside_junctions(self, rng):
        x = rng.uniform(-0.5, 0.5, 3000)
        neg = generate_negatives(Waveform(x, 16000))[3]  # order (2, 0, 1)
        s = neg.samples
        np.testing.assert_array_equal(s[:984], x[2000:2984])
        np.testing.assert_array_equal(s[1000:1968], x[16:984])
        np.testing.assert_array_equal(s[1984:], x[1016:2000])
        k = np.arange(16)
        np.testing.assert_allclose(s[984:1000], x[2984:3000] * (16 - k) / 16 + x[:16] * k / 16)

    def test_too_short(self):
        with pytest.raises(UsageError):
            generate_negatives(Waveform(np.zeros(48), 16000))
        assert len(generate_negatives(Waveform(np.zeros(51), 16000))) == 5

    def test_clamping_is_counted(self):
        segs = [np.full(20, 0.9), np.full(20, 0.9)]
        out, clipped = crossfade_concat(segs, overlap=0)
        assert clipped == 0
        out, clipped = crossfade_concat([np.full(20, 1.5), np.full(20, -2.0)], overlap=4)
        # junction: 1.5, 0.625, -0.25, -1.125
        assert clipped == 16 + 2 + 16
        assert out.max() == 32767 / 32768 and out.min() == -1.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(51, 4000), st.integers(0, 2**32 - 1))
    def test_lengths_property(self, length, seed):
        x = np.random.default_rng(seed).uniform(-0.9, 0.9, length)
        for n in generate_negatives(Waveform(x, 16000)):
            assert len(n) == length - 32
            assert np.all(np.abs(n.samples) <= 0.9 + 1e-12)


class TestPgramNegatives:
    def test_blocks_reordered(self, phones):
        post = synthesize(SynthSpec(phones.encode("S N AE P T".split()), seed=3))
        T = post.num_frames
        negs = generate_negatives_pgram(post)
        assert len(negs) == 5
        b = split_points(T)
        first = negs[0].frames  # order (0, 2, 1)
        np.testing.assert_array_equal(first[:b[1]], post.frames[:b[1]])
        np.testing.assert_array_equal(first[b[1]:b[1] + T - b[2]], post.frames[b[2]:])
        assert all(n.num_frames == T for n in negs)

    def test_too_short(self, phones):
        post = synthesize(SynthSpec([0], frames_per_label=2, seed=0))
        with pytest.raises(UsageError):
            generate_negatives_pgram(post)


class TestWav:
    def test_round_trip(self, rng):
        pcm = rng.integers(-32768, 32768, size=500).astype(np.int16)
        w = Waveform.from_pcm16(pcm, 16000)
        back = read_wav(write_wav(w))
        assert back == w
        np.testing.assert_array_equal(back.to_pcm16(), pcm)

    def test_hand_built_header(self):
        samples = struct.pack("<4h", 0, 16384, -32768, 32767)
        header = (b"RIFF" + struct.pack("<I", 36 + len(samples)) + b"WAVE"
                  + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 8000, 16000, 2, 16)
                  + b"data" + struct.pack("<I", len(samples)))
        assert len(header) == 44
        w = read_wav(header + samples)
        assert w.sample_rate == 8000
        np.testing.assert_array_equal(w.samples, [0.0, 0.5, -1.0, 32767 / 32768])

    def test_stereo_rejected(self):
        with pytest.raises(UnsupportedFormatError):
            read_wav(_wav_bytes(channels=2))

    def test_8bit_rejected(self):
        with pytest.raises(UnsupportedFormatError):
            read_wav(_wav_bytes(width=1, frames=b"\x80" * 4))

    def test_float_rejected(self):
        fmt = struct.pack("<IHHIIHH", 16, 3, 1, 8000, 32000, 4, 32)
        data = b"RIFF" + struct.pack("<I", 36) + b"WAVE" + b"fmt " + fmt + b"data" + b"\0" * 4
        with pytest.raises(UnsupportedFormatError):
            read_wav(data)

    def test_not_riff(self):
        with pytest.raises(FormatError):
            read_wav(b"PGM1" + b"\0" * 40)
