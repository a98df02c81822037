"""WER/CER by Levenshtein alignment with backtrace, plus diff rendering.

Rates are kept as exact fractions; ``format_rate`` gives the three-decimal
rendering used in reports.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence


class OpKind(str, enum.Enum):
    MATCH = "Match"
    SUBSTITUTION = "Substitution"
    DELETION = "Deletion"
    INSERTION = "Insertion"


class AlignmentOp(NamedTuple):
    kind: OpKind
    ref_unit: Optional[str]
    hyp_unit: Optional[str]


class MetricsError(ValueError):
    pass


class EmptyCorpus(MetricsError):
    pass


class DivisionByZeroReference(MetricsError, ZeroDivisionError):
    """Rate requested for an empty reference with a non-empty hypothesis.

    The counts stay available on ``.report``.
    """

    def __init__(self, report):
        super().__init__(f"empty reference with {report.errors} hypothesis errors")
        self.report = report


def format_rate(rate: Fraction) -> str:
    return f"{float(rate):.3f}"


@dataclass(frozen=True)
class AlignmentReport:
    S: int
    D: int
    I: int
    N: int
    ops: tuple = field(repr=False)
    unit: str = "word"

    @property
    def errors(self) -> int:
        return self.S + self.D + self.I

    @property
    def rate(self) -> Fraction:
        if self.N == 0:
            if self.errors:
                raise DivisionByZeroReference(self)
            return Fraction(0)
        return Fraction(self.errors, self.N)

    def to_dict(self, with_ops: bool = False) -> dict:
        d = {"unit": self.unit, "S": self.S, "D": self.D, "I": self.I, "N": self.N}
        try:
            rate = self.rate
            d["rate"] = format_rate(rate)
            d["rate_exact"] = f"{rate.numerator}/{rate.denominator}"
        except DivisionByZeroReference:
            d["rate"] = None
            d["rate_exact"] = None
        if with_ops:
            d["ops"] = [[op.kind.value, op.ref_unit, op.hyp_unit] for op in self.ops]
        return d


def align(ref_units: Sequence[str], hyp_units: Sequence[str], unit: str = "word") -> AlignmentReport:
    """Minimal-cost alignment of two unit sequences.

    Backtrace runs from the bottom-right cell and prefers, at equal cost,
    Match, then Substitution, then Deletion, then Insertion.
    """
    n, m = len(ref_units), len(hyp_units)
    rows = [list(range(m + 1))]
    prev = rows[0]
    for i in range(1, n + 1):
        r = ref_units[i - 1]
        cur = [i] * (m + 1)
        for j in range(1, m + 1):
            diag = prev[j - 1] + (r != hyp_units[j - 1])
            up = prev[j] + 1
            left = cur[j - 1] + 1
            cur[j] = min(diag, up, left)
        rows.append(cur)
        prev = cur

    ops = []
    s = d = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        cost = rows[i][j]
        if i > 0 and j > 0:
            r, h = ref_units[i - 1], hyp_units[j - 1]
            if r == h and cost == rows[i - 1][j - 1]:
                ops.append(AlignmentOp(OpKind.MATCH, r, h))
                i -= 1
                j -= 1
                continue
            if cost == rows[i - 1][j - 1] + 1:
                ops.append(AlignmentOp(OpKind.SUBSTITUTION, r, h))
                s += 1
                i -= 1
                j -= 1
                continue
        if i > 0 and cost == rows[i - 1][j] + 1:
            ops.append(AlignmentOp(OpKind.DELETION, ref_units[i - 1], None))
            d += 1
            i -= 1
        else:
            ops.append(AlignmentOp(OpKind.INSERTION, None, hyp_units[j - 1]))
            ins += 1
            j -= 1
    ops.reverse()
    return AlignmentReport(s, d, ins, n, tuple(ops), unit)


def wer(ref: str, hyp: str) -> AlignmentReport:
    return align(ref.split(), hyp.split(), unit="word")


def cer(ref: str, hyp: str) -> AlignmentReport:
    """Character alignment; spaces count as characters."""
    return align(list(ref), list(hyp), unit="char")


@dataclass(frozen=True)
class CorpusScore:
    wer: Fraction
    cer: Fraction
    per_utterance: list = field(repr=False)

    def to_dict(self) -> dict:
        word = [w for w, _ in self.per_utterance]
        char = [c for _, c in self.per_utterance]
        return {
            "utterances": len(self.per_utterance),
            "wer": format_rate(self.wer),
            "cer": format_rate(self.cer),
            "word": _totals(word),
            "char": _totals(char),
        }


def _totals(reports) -> dict:
    return {k: sum(getattr(r, k) for r in reports) for k in ("S", "D", "I", "N")}


def _micro(reports, unit: str) -> Fraction:
    errors = sum(r.errors for r in reports)
    n = sum(r.N for r in reports)
    if n == 0:
        if errors:
            raise DivisionByZeroReference(AlignmentReport(
                sum(r.S for r in reports), sum(r.D for r in reports),
                sum(r.I for r in reports), 0, (), unit))
        return Fraction(0)
    return Fraction(errors, n)


def score_corpus(pairs) -> CorpusScore:
    """Micro-averaged WER and CER: summed errors over summed reference length."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyCorpus("no (reference, hypothesis) pairs to score")
    per = [(wer(r, h), cer(r, h)) for r, h in pairs]
    return CorpusScore(
        wer=_micro([w for w, _ in per], "word"),
        cer=_micro([c for _, c in per], "char"),
        per_utterance=per,
    )


_PLAIN = {"S": ("[[S:", "]]"), "D": ("[[D:", "]]"), "I": ("[[I:", "]]")}
_MARKUP = {"S": ("<sub>", "</sub>"), "D": ("<del>", "</del>"), "I": ("<ins>", "</ins>")}


def _spans(ops):
    """Group ops into ("=", ref, hyp) matches and maximal non-match runs."""
    run_ref, run_hyp = [], []
    for op in ops:
        if op.kind is OpKind.MATCH:
            if run_ref or run_hyp:
                yield "!", run_ref, run_hyp
                run_ref, run_hyp = [], []
            yield "=", [op.ref_unit], [op.hyp_unit]
        else:
            if op.ref_unit is not None:
                run_ref.append(op.ref_unit)
            if op.hyp_unit is not None:
                run_hyp.append(op.hyp_unit)
    if run_ref or run_hyp:
        yield "!", run_ref, run_hyp


def render_diff(report: AlignmentReport, mode: str = "plain") -> str:
    """Two-line REF/HYP rendering with error spans wrapped in markers.

    A run of consecutive errors becomes one span: a substitution span when
    both sides have units, otherwise a deletion (reference line only) or an
    insertion (hypothesis line only).
    """
    if mode not in ("plain", "markup"):
        raise ValueError(f"mode must be 'plain' or 'markup', got {mode!r}")
    marks = _PLAIN if mode == "plain" else _MARKUP
    sep = " " if report.unit == "word" else ""
    ref_out, hyp_out = [], []
    for tag, r, h in _spans(report.ops):
        if tag == "=":
            ref_out.append(r[0])
            hyp_out.append(h[0])
            continue
        label = "S" if r and h else ("D" if r else "I")
        open_, close = marks[label]
        if r:
            ref_out.append(open_ + sep.join(r) + close)
        if h:
            hyp_out.append(open_ + sep.join(h) + close)
    return f"REF: {sep.join(ref_out)}\nHYP: {sep.join(hyp_out)}"
