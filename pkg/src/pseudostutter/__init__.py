"""Synthetic stuttered-speech dataset tooling for Indonesian."""

from .disfluency import AugmentationConfig, DisfluencyEvent, DisfluencyKind, StutteredSentence, destutter, inject
from .metrics import AlignmentReport, align, cer, render_diff, score_corpus, wer
from .normalize import normalize_text
from .syllabify import Syllable, initial_syllable, onset_grapheme, syllabify

__version__ = "0.1.0"
