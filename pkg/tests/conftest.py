import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qbekws.phonetics import Alphabet, default_alphabet  # noqa: E402
from qbekws.posteriorgram import Posteriorgram  # noqa: E402


def toy_alphabet(n):
    """``n`` symbols: n-2 letters, the space and the blank (last)."""
    letters = tuple("abcdefgh"[: n - 2])
    return Alphabet(letters + ("sp", "<b>"), blank_index=n - 1, space_index=n - 2)


def random_pgram(rng, T, alphabet, concentration=1.0):
    frames = rng.dirichlet(np.full(len(alphabet), concentration), size=T)
    return Posteriorgram(frames, alphabet)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def abc():
    return toy_alphabet(4)


@pytest.fixture
def phones():
    return default_alphabet()
