"""Reference implementations kept independent of the package code paths."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def edit_distance(a: tuple, b: tuple) -> int:
    """Levenshtein distance straight from its recursive definition over suffixes."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        edit_distance(a[1:], b) + 1,
        edit_distance(a, b[1:]) + 1,
        edit_distance(a[1:], b[1:]) + (a[0] != b[0]),
    )


@lru_cache(maxsize=None)
def exhaustive_alignments(a: tuple, b: tuple) -> frozenset:
    """Every (S, D, I) triple reachable by some alignment of ``a`` with ``b``."""
    if not a:
        return frozenset({(0, 0, len(b))})
    if not b:
        return frozenset({(0, len(a), 0)})
    out = set()
    for s, d, i in exhaustive_alignments(a[1:], b[1:]):
        out.add((s + (a[0] != b[0]), d, i))
    for s, d, i in exhaustive_alignments(a[1:], b):
        out.add((s, d + 1, i))
    for s, d, i in exhaustive_alignments(a, b[1:]):
        out.add((s, d, i + 1))
    return frozenset(out)


def naive_dp(ref, hyp) -> int:
    """Plain full-table DP, written separately from metrics.align."""
    table = np.zeros((len(ref) + 1, len(hyp) + 1), dtype=int)
    table[:, 0] = np.arange(len(ref) + 1)
    table[0, :] = np.arange(len(hyp) + 1)
    for i, j in itertools.product(range(1, len(ref) + 1), range(1, len(hyp) + 1)):
        table[i, j] = min(table[i - 1, j] + 1, table[i, j - 1] + 1,
                          table[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]))
    return int(table[-1, -1])


def dft_peak_hz(samples: np.ndarray, rate: int) -> tuple[float, float]:
    """Frequency of the largest DFT magnitude and the bin width."""
    spectrum = np.abs(np.fft.rfft(samples * np.hanning(len(samples))))
    freqs = np.fft.rfftfreq(len(samples), 1.0 / rate)
    return float(freqs[int(np.argmax(spectrum))]), rate / len(samples)
