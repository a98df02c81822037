"""Orthographic syllabification of Indonesian words.

Segmentation follows the maximal-onset principle over a small phonotactic
inventory: single consonants, the digraphs ``ng ny kh sy`` and a fixed
whitelist of loan clusters may start a syllable. Adjacent vowels are split
(hiatus) except for the diphthongs ``ai au oi`` at the end of a word with
at least one other nucleus, so ``pulau`` is ``pu-lau`` but ``mau`` is
``ma-u``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

VOWELS = frozenset("aeiou")
DIGRAPHS = ("ng", "ny", "kh", "sy")
CLUSTERS = frozenset(
    {"pr", "br", "tr", "dr", "kr", "gr", "pl", "bl", "kl", "gl",
     "fl", "fr", "sl", "sp", "st", "sk", "str", "spr"}
)
DIPHTHONGS = frozenset({"ai", "au", "oi"})

_WORD_RE = re.compile(r"[a-z]+")


class SyllabifyError(ValueError):
    pass


class InvalidWord(SyllabifyError):
    pass


class NoNucleus(SyllabifyError):
    pass


@dataclass(frozen=True)
class Syllable:
    onset: str
    nucleus: str
    coda: str

    @property
    def text(self) -> str:
        return self.onset + self.nucleus + self.coda

    def __str__(self) -> str:
        return self.text


def graphemes(word: str) -> list[str]:
    """Split ``word`` into graphemes, reading the digraphs left to right."""
    out = []
    i = 0
    while i < len(word):
        pair = word[i:i + 2]
        if pair in DIGRAPHS:
            out.append(pair)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return out


def is_legal_onset(cluster: list[str]) -> bool:
    if len(cluster) == 1:
        return cluster[0] not in VOWELS
    return "".join(cluster) in CLUSTERS


def _nuclei(gs: list[str]) -> list[tuple[int, int]]:
    """Vowel runs as half-open grapheme spans, split for hiatus."""
    runs = []
    i = 0
    while i < len(gs):
        if gs[i] in VOWELS:
            j = i
            while j < len(gs) and gs[j] in VOWELS:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1

    spans = []
    for r, (start, end) in enumerate(runs):
        for k in range(start, end):
            spans.append((k, k + 1))
        # word-final diphthong merges when it is not the only nucleus
        is_final = r == len(runs) - 1 and end == len(gs)
        if is_final and end - start >= 2 and len(spans) >= 3:
            if gs[end - 2] + gs[end - 1] in DIPHTHONGS:
                spans[-2:] = [(end - 2, end)]
    return spans


@lru_cache(maxsize=65536)
def _syllabify(word: str) -> tuple[Syllable, ...]:
    if not word or not _WORD_RE.fullmatch(word):
        raise InvalidWord(f"not a lowercase alphabetic word: {word!r}")
    gs = graphemes(word)
    spans = _nuclei(gs)
    if not spans:
        raise NoNucleus(f"no vowel in {word!r}")

    # onset_start[k] is the grapheme index where syllable k begins
    onset_start = [0]
    for (_, prev_end), (next_start, _) in zip(spans, spans[1:]):
        cut = next_start
        # right to left: grow the onset while it stays legal
        while cut - 1 >= prev_end and is_legal_onset(gs[cut - 1:next_start]):
            cut -= 1
        onset_start.append(cut)

    sylls = []
    for k, (n_start, n_end) in enumerate(spans):
        begin = onset_start[k]
        end = onset_start[k + 1] if k + 1 < len(spans) else len(gs)
        sylls.append(Syllable(
            onset="".join(gs[begin:n_start]),
            nucleus="".join(gs[n_start:n_end]),
            coda="".join(gs[n_end:end]),
        ))
    return tuple(sylls)


def syllabify(word: str) -> list[Syllable]:
    """Segment a lowercase alphabetic ``word`` into syllables.

    Raises InvalidWord for anything outside ``[a-z]+`` (hyphens included)
    and NoNucleus when the word has no vowel.
    """
    return list(_syllabify(word))


def initial_syllable(word: str) -> Syllable:
    return _syllabify(word)[0]


def onset_grapheme(word: str) -> str:
    """Onset of the first syllable, or its first vowel when the onset is empty."""
    first = _syllabify(word)[0]
    if first.onset:
        return first.onset
    return first.nucleus[0]
