import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_pgram, toy_alphabet
from oracles import collapse_ref, ctc_probability, label_sequences
from qbekws.errors import InfeasibleError, MalformedInputError, ValidationError
from qbekws.phonetics import Alphabet, check_labels, collapse, ctc_forward, default_alphabet
from qbekws.posteriorgram import Posteriorgram


class TestAlphabet:
    def test_default_inventory(self):
        a = default_alphabet()
        assert len(a) == 41
        assert a.symbols[a.blank_index] == "<b>"
        assert a.symbols[a.space_index] == "sp"
        assert len(set(a.symbols)) == 41

    def test_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            Alphabet(("a", "a", "sp", "<b>"), 3, 2)

    def test_blank_and_space_distinct(self):
        with pytest.raises(ValidationError):
            Alphabet(("a", "sp", "<b>"), 2, 2)

    def test_from_symbols_needs_blank(self):
        with pytest.raises(ValidationError):
            Alphabet.from_symbols(["a", "sp"])

    def test_encode_decode(self, phones):
        labels = phones.encode("HH EY".split())
        assert phones.decode(labels) == ("HH", "EY")
        with pytest.raises(MalformedInputError):
            phones.encode(["QQ"])


class TestCollapse:
    # symbols x y z, blank
    alpha = Alphabet(("x", "y", "z", "<b>"), blank_index=3, space_index=2)

    def test_worked_example(self):
        x, y, z, b = 0, 1, 2, 3
        assert collapse([x, b, y, y, b, z], self.alpha) == (x, y, z)
        assert collapse([x, b, b, y, z, b], self.alpha) == (x, y, z)

    def test_all_blank(self):
        assert collapse([3, 3, 3], self.alpha) == ()

    def test_blank_separates_repeats(self):
        assert collapse([0, 0, 3, 0], self.alpha) == (0, 0)

    def test_invalid_index(self):
        with pytest.raises(MalformedInputError):
            collapse([0, 7], self.alpha)

    def test_empty_path(self):
        with pytest.raises(MalformedInputError):
            collapse([], self.alpha)

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=30))
    def test_matches_reference(self, path):
        assert collapse(path, self.alpha) == collapse_ref(path, 3)

    @given(st.lists(st.integers(0, 2), max_size=8).filter(
        lambda ys: all(a != b for a, b in zip(ys, ys[1:]))),
        st.data())
    def test_embedding_round_trip(self, labels, data):
        path = []
        for lab in labels:
            path += [3] * data.draw(st.integers(0, 2))
            path += [lab] * data.draw(st.integers(1, 3))
        path += [3] * data.draw(st.integers(0 if path else 1, 2))
        assert collapse(path, self.alpha) == tuple(labels)

    def test_check_labels_rejects_blank(self):
        with pytest.raises(MalformedInputError):
            check_labels([0, 3], self.alpha)


class TestCtcForward:
    def test_one_hot_single_frame(self, abc):
        post = Posteriorgram([[1.0, 0.0, 0.0, 0.0]], abc)
        assert ctc_forward(post, [0]) == 0.0

    def test_uniform_two_frames(self):
        # symbols a, b (space), blank: B^-1("a") = {aa, a-, -a}
        alpha = Alphabet(("a", "b", "<b>"), blank_index=2, space_index=1)
        post = Posteriorgram(np.full((2, 3), 1 / 3), alpha)
        assert ctc_forward(post, [0]) == pytest.approx(math.log(3 / 9), rel=1e-12)

    def test_random_matches_enumeration(self, rng):
        alpha = toy_alphabet(4)
        post = random_pgram(rng, 4, alpha)
        expected = ctc_probability(post.frames, (0, 1), alpha.blank_index)
        assert math.exp(ctc_forward(post, [0, 1])) == pytest.approx(expected, rel=1e-9)

    def test_repeat_needs_blank(self, rng):
        alpha = toy_alphabet(4)
        post = random_pgram(rng, 3, alpha)
        expected = ctc_probability(post.frames, (0, 0), alpha.blank_index)
        assert math.exp(ctc_forward(post, [0, 0])) == pytest.approx(expected, rel=1e-9)
        with pytest.raises(InfeasibleError):
            ctc_forward(random_pgram(rng, 2, alpha), [0, 0, 1])

    def test_empty_labels(self, rng, abc):
        post = random_pgram(rng, 3, abc)
        assert ctc_forward(post, []) == pytest.approx(np.log(post.frames[:, 3]).sum())

    def test_unnormalized_rows_rejected(self, abc):
        post = Posteriorgram([[0.5, 0.1, 0.1, 0.1]], abc)
        with pytest.raises(ValidationError):
            ctc_forward(post, [0])

    @pytest.mark.parametrize("T", [1, 2, 3, 4])
    def test_total_mass_is_one(self, rng, T):
        alpha = toy_alphabet(4)
        post = random_pgram(rng, T, alpha)
        symbols = [0, 1, 2]
        total = 0.0
        for labels in label_sequences(symbols, T):
            try:
                total += math.exp(ctc_forward(post, labels))
            except InfeasibleError:
                assert ctc_probability(post.frames, labels, alpha.blank_index) == 0.0
        assert total == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(3, 4), st.integers(0, 2**32 - 1), st.data())
    def test_property_against_enumeration(self, T, N, seed, data):
        alpha = toy_alphabet(N)
        post = random_pgram(np.random.default_rng(seed), T, alpha)
        labels = data.draw(st.lists(st.integers(0, N - 2), max_size=3))
        expected = ctc_probability(post.frames, labels, alpha.blank_index)
        try:
            got = math.exp(ctc_forward(post, labels))
        except InfeasibleError:
            assert expected == 0.0
            return
        assert got == pytest.approx(expected, rel=1e-9, abs=0)
