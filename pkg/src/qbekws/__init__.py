"""Query-by-example keyword spotting over phonetic posteriorgrams."""

from .decoder import DecoderConfig, DetectionScore, score_averaged, score_window, spot_stream
from .dtw import DtwConfig, DtwResult, sdtw, sdtw_score
from .enrollment import Hypothesis, HypothesisFst, build_fst, max_decode
from .errors import KwsError
from .negatives import Waveform, generate_negatives, generate_negatives_pgram
from .phonetics import Alphabet, collapse, ctc_forward, default_alphabet
from .posteriorgram import Posteriorgram, SynthSpec, read_pgram, synthesize, validate, write_pgram
from .threshold import EnrollmentProfile, ThresholdConfig, decide, predict_threshold

__version__ = "0.1.0"
