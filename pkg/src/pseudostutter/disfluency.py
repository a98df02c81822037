"""Rule-based disfluency injection with exact provenance.

Each token gets an independent Bernoulli(p) draw deciding whether it carries
a repetition or prolongation. Independently, each gap *before* a token can
receive an interjection with probability ``p * interjection_share``; the gap
after the last token never does. Every change is recorded as a
:class:`DisfluencyEvent`, which is enough for :func:`destutter` to restore
the source sentence exactly.

RNG draw order, per token ``i``: one uniform for the gap before ``i`` (plus
one filler index when it fires), one uniform for the word, then when the
word fires one kind draw and the draws of the chosen renderer (copies, or
position and length).
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

import numpy as np

from .normalize import normalize_text
from .rng import derive_rng
from .syllabify import SyllabifyError, graphemes, initial_syllable, syllabify


class DisfluencyKind(str, enum.Enum):
    REPETITION_SYLLABLE = "RepetitionSyllable"
    REPETITION_WORD = "RepetitionWord"
    PROLONGATION = "Prolongation"
    INTERJECTION_SHORT = "InterjectionShort"
    INTERJECTION_THINKING = "InterjectionThinking"

    @property
    def is_interjection(self) -> bool:
        return self in (DisfluencyKind.INTERJECTION_SHORT, DisfluencyKind.INTERJECTION_THINKING)


WORD_KINDS = (
    DisfluencyKind.REPETITION_SYLLABLE,
    DisfluencyKind.REPETITION_WORD,
    DisfluencyKind.PROLONGATION,
)

VOWELS = frozenset("aeiou")
CONTINUANTS = frozenset({"s", "m", "n", "r", "l", "f", "v", "z", "w", "y", "ng", "ny", "sy", "kh"})
PROLONGABLE = VOWELS | CONTINUANTS
STOPS = frozenset("pbtdkgcj")

DEFAULT_SHORT_FILLERS = ("emm", "hmm", "anu", "eee")
DEFAULT_THINKING_FILLERS = ("apa ya…?", "sebentar…")
# not from any source corpus; a plain list of common Indonesian connectives
DEFAULT_DISCOURSE_MARKERS = (
    "jadi", "terus", "lalu", "kemudian", "nah", "tapi", "tetapi",
    "karena", "soalnya", "makanya", "sebenarnya", "pokoknya",
)


class DisfluencyError(ValueError):
    pass


class ConfigError(DisfluencyError):
    pass


class EmptyInput(DisfluencyError):
    pass


class NotNormalized(DisfluencyError):
    pass


class NotProlongable(DisfluencyError):
    pass


class NotRepeatable(DisfluencyError):
    pass


class ForbiddenPosition(DisfluencyError):
    pass


class ProvenanceMismatch(DisfluencyError):
    pass


def _range(value, name: str, minimum: int) -> tuple[int, int]:
    lo, hi = (int(v) for v in value)
    if lo < minimum or hi < lo:
        raise ConfigError(f"{name} must satisfy {minimum} <= min <= max, got {value!r}")
    return lo, hi


@dataclass(frozen=True)
class AugmentationConfig:
    p_disfluency: float = 0.3
    kind_weights: dict = field(default_factory=lambda: {k.value: 1.0 for k in DisfluencyKind})
    repetition_copies: tuple = (1, 3)
    prolongation_length: tuple = (2, 4)
    # share of prolongations targeting the last grapheme instead of the first
    prolongation_final_share: float = 0.5
    short_fillers: tuple = DEFAULT_SHORT_FILLERS
    thinking_fillers: tuple = DEFAULT_THINKING_FILLERS
    discourse_markers: tuple = DEFAULT_DISCOURSE_MARKERS
    # "raw" keeps filler punctuation ("apa ya…?"), "normalized" strips it
    filler_surface: str = "raw"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_disfluency <= 1.0:
            raise ConfigError(f"p_disfluency must be in [0, 1], got {self.p_disfluency}")
        weights = {}
        for name, w in dict(self.kind_weights).items():
            try:
                kind = DisfluencyKind(name)
            except ValueError:
                raise ConfigError(f"unknown disfluency kind {name!r}") from None
            if not w >= 0:
                raise ConfigError(f"weight for {name} must be non-negative, got {w}")
            weights[kind.value] = float(w)
        if not any(w > 0 for w in weights.values()):
            raise ConfigError("at least one kind weight must be positive")
        object.__setattr__(self, "kind_weights", weights)
        object.__setattr__(self, "repetition_copies", _range(self.repetition_copies, "repetition_copies", 1))
        object.__setattr__(self, "prolongation_length", _range(self.prolongation_length, "prolongation_length", 2))
        if not 0.0 <= self.prolongation_final_share <= 1.0:
            raise ConfigError("prolongation_final_share must be in [0, 1]")
        for name in ("short_fillers", "thinking_fillers"):
            fillers = tuple(getattr(self, name))
            if not fillers or not all(normalize_text(f) for f in fillers):
                raise ConfigError(f"{name} must be a non-empty list of non-empty fillers")
            object.__setattr__(self, name, fillers)
        object.__setattr__(self, "discourse_markers", tuple(self.discourse_markers))
        if self.filler_surface not in ("raw", "normalized"):
            raise ConfigError(f"filler_surface must be 'raw' or 'normalized', got {self.filler_surface!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def weight(self, kind: DisfluencyKind) -> float:
        return self.kind_weights.get(kind.value, 0.0)

    @property
    def interjection_share(self) -> float:
        total = sum(self.kind_weights.values())
        return (self.weight(DisfluencyKind.INTERJECTION_SHORT)
                + self.weight(DisfluencyKind.INTERJECTION_THINKING)) / total

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("repetition_copies", "prolongation_length", "short_fillers",
                    "thinking_fillers", "discourse_markers"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown augmentation keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DisfluencyEvent:
    kind: DisfluencyKind
    word_index: int
    original: str
    rendered: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "word_index": self.word_index,
                "original": self.original, "rendered": self.rendered}

    @classmethod
    def from_dict(cls, d: dict) -> "DisfluencyEvent":
        return cls(DisfluencyKind(d["kind"]), int(d["word_index"]), d["original"], d["rendered"])

    @property
    def sort_key(self) -> tuple[int, int]:
        # the filler at gap i precedes the rendering of word i
        return (self.word_index, 0 if self.kind.is_interjection else 1)


@dataclass(frozen=True)
class StutteredSentence:
    text: str
    events: tuple
    source: str

    def to_dict(self) -> dict:
        return {"source": self.source, "text": self.text,
                "events": [e.to_dict() for e in self.events]}


def is_syllabifiable(token: str) -> bool:
    try:
        for part in token.split("-"):
            syllabify(part)
    except SyllabifyError:
        return False
    return True


def apply_repetition_syllable(word: str, copies: int) -> str:
    """``("saya", 2)`` -> ``"sa-sa-saya"``. Syllabifier errors propagate."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    syl = initial_syllable(word).text
    return "-".join([syl] * copies + [word])


def apply_repetition_word(word: str, copies: int) -> str:
    """Space-joined whole-word repetition with ``copies`` extra copies."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if "-" in word:
        raise NotRepeatable(f"refusing to repeat hyphenated token {word!r}")
    return " ".join([word] * (copies + 1))


def apply_prolongation(word: str, length: int, position: str = "onset") -> str:
    """Replace one grapheme by ``length`` copies of itself.

    ``position`` picks the first grapheme (``onset``), the last (``final``)
    or the first vowel (``nucleus``).
    """
    if length < 2:
        raise ValueError("length must be >= 2")
    gs = graphemes(word)
    if not gs:
        raise NotProlongable("empty word")
    if position == "onset":
        idx = 0
    elif position == "final":
        idx = len(gs) - 1
    elif position == "nucleus":
        idx = next((k for k, g in enumerate(gs) if g in VOWELS), None)
        if idx is None:
            raise NotProlongable(f"no vowel in {word!r}")
    else:
        raise ValueError(f"position must be onset, final or nucleus, got {position!r}")
    target = gs[idx]
    if target not in PROLONGABLE:
        raise NotProlongable(f"{target!r} in {word!r} cannot be prolonged")
    return "".join(gs[:idx]) + target * length + "".join(gs[idx + 1:])


def filler_surface(filler: str, config: AugmentationConfig) -> str:
    return filler if config.filler_surface == "raw" else normalize_text(filler)


def choose_interjection(gap_index: int, token_count: int, prev_token: Optional[str],
                        config: AugmentationConfig,
                        rng: np.random.Generator) -> tuple[DisfluencyKind, str]:
    """Pick the filler for the gap before token ``gap_index``.

    Sentence-initial gaps and gaps after a discourse marker get a "thinking"
    expression; all other gaps get a short filler. Consumes one draw.
    """
    if not 0 <= gap_index < token_count:
        raise ForbiddenPosition(f"no interjection allowed at gap {gap_index} of {token_count}")
    if gap_index == 0 or prev_token in config.discourse_markers:
        kind, pool = DisfluencyKind.INTERJECTION_THINKING, config.thinking_fillers
    else:
        kind, pool = DisfluencyKind.INTERJECTION_SHORT, config.short_fillers
    return kind, pool[int(rng.integers(len(pool)))]


def _draw_range(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1], endpoint=True))


def _try_prolong(token: str, rng, config: AugmentationConfig, fallback: bool) -> Optional[str]:
    first = "final" if rng.random() < config.prolongation_final_share else "onset"
    length = _draw_range(rng, config.prolongation_length)
    positions = [first]
    if fallback:
        positions += ["onset" if first == "final" else "final", "nucleus"]
    for pos in positions:
        try:
            return apply_prolongation(token, length, pos)
        except NotProlongable:
            continue
    return None


def _render_word(token: str, kind: DisfluencyKind, rng,
                 config: AugmentationConfig) -> Optional[tuple[DisfluencyKind, str]]:
    """Render one word event, walking the fallback chain.

    Prolongation and syllable repetition fall back to word repetition, and
    unsyllabifiable words only ever get word repetition. Hyphenated tokens
    are never repeated: every kind becomes a prolongation of the first or
    last grapheme, else of the first vowel. Only a hyphenated token with no
    vowel and stops at both ends yields no event.
    """
    if "-" in token:
        rendered = _try_prolong(token, rng, config, fallback=True)
        return None if rendered is None else (DisfluencyKind.PROLONGATION, rendered)

    syllabifiable = is_syllabifiable(token)
    if kind is DisfluencyKind.REPETITION_SYLLABLE:
        if syllabifiable:
            return kind, apply_repetition_syllable(token, _draw_range(rng, config.repetition_copies))
        kind = DisfluencyKind.REPETITION_WORD

    if kind is DisfluencyKind.PROLONGATION:
        if syllabifiable:
            rendered = _try_prolong(token, rng, config, fallback=False)
            if rendered is not None:
                return kind, rendered
        kind = DisfluencyKind.REPETITION_WORD

    return kind, apply_repetition_word(token, _draw_range(rng, config.repetition_copies))


def _draw_word_kind(rng, config: AugmentationConfig) -> DisfluencyKind:
    weights = np.array([config.weight(k) for k in WORD_KINDS])
    cum = np.cumsum(weights / weights.sum())
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return WORD_KINDS[min(idx, len(WORD_KINDS) - 1)]


def _check_sentence(sentence: str) -> list[str]:
    if not sentence or not sentence.strip():
        raise EmptyInput("cannot augment an empty sentence")
    toks = sentence.split(" ")
    if any(not t for t in toks) or any(c.isspace() for t in toks for c in t):
        raise NotNormalized(f"sentence is not single-space tokenized: {sentence!r}")
    return toks


def inject(sentence: str, config: AugmentationConfig, key: str = "",
           at_least_one: bool = False) -> StutteredSentence:
    """Inject disfluencies into a normalized sentence.

    ``key`` (an utterance id, say) is mixed into ``config.seed`` so corpus
    runs give every sentence its own stream. With ``at_least_one`` a sentence
    that received no event is given one forced word event (or, failing
    that, a sentence-initial interjection).
    """
    toks = _check_sentence(sentence)
    n = len(toks)
    rng = derive_rng(int(config.seed), key)
    p = config.p_disfluency
    gap_p = p * config.interjection_share
    word_weight = sum(config.weight(k) for k in WORD_KINDS)

    events = []
    for i, token in enumerate(toks):
        if rng.random() < gap_p:
            kind, filler = choose_interjection(i, n, toks[i - 1] if i else None, config, rng)
            events.append(DisfluencyEvent(kind, i, "", filler_surface(filler, config)))
        if rng.random() < p and word_weight > 0:
            rendered = _render_word(token, _draw_word_kind(rng, config), rng, config)
            if rendered is not None:
                events.append(DisfluencyEvent(rendered[0], i, token, rendered[1]))

    if at_least_one and not events:
        events.append(_forced_event(toks, config, rng, word_weight))

    events.sort(key=lambda e: e.sort_key)
    return StutteredSentence(render(toks, events), tuple(events), sentence)


def _forced_event(toks: list[str], config: AugmentationConfig, rng, word_weight: float) -> DisfluencyEvent:
    n = len(toks)
    if word_weight > 0:
        start = int(rng.integers(n))
        for offset in range(n):
            i = (start + offset) % n
            rendered = _render_word(toks[i], _draw_word_kind(rng, config), rng, config)
            if rendered is not None:
                return DisfluencyEvent(rendered[0], i, toks[i], rendered[1])
    kind, filler = choose_interjection(0, n, None, config, rng)
    return DisfluencyEvent(kind, 0, "", filler_surface(filler, config))


def render(toks: list[str], events) -> str:
    by_index: dict[int, list[DisfluencyEvent]] = {}
    for e in events:
        by_index.setdefault(e.word_index, []).append(e)
    out = []
    for i, token in enumerate(toks):
        word = token
        for e in sorted(by_index.get(i, ()), key=lambda e: e.sort_key):
            if e.kind.is_interjection:
                out.append(e.rendered)
            else:
                word = e.rendered
        out.append(word)
    return " ".join(out)


def _consistent(event: DisfluencyEvent) -> bool:
    word, rendered = event.original, event.rendered
    if not word:
        return False
    if event.kind is DisfluencyKind.REPETITION_WORD:
        parts = rendered.split(" ")
        return len(parts) >= 2 and all(p == word for p in parts)
    if event.kind is DisfluencyKind.REPETITION_SYLLABLE:
        if not rendered.endswith("-" + word):
            return False
        prefix = rendered[:-len(word) - 1].split("-")
        try:
            syl = initial_syllable(word).text
        except SyllabifyError:
            return False
        return all(p == syl for p in prefix)
    if event.kind is DisfluencyKind.PROLONGATION:
        gs = graphemes(word)
        vowel = next((g for g in gs if g in VOWELS), gs[0])
        extra = len(rendered) - len(word)
        for pos, g in (("onset", gs[0]), ("final", gs[-1]), ("nucleus", vowel)):
            if extra <= 0 or extra % len(g):
                continue
            try:
                if apply_prolongation(word, 1 + extra // len(g), pos) == rendered:
                    return True
            except NotProlongable:
                pass
        return False
    return False


def destutter(text: str, events) -> str:
    """Undo :func:`inject` using its event list.

    Raises ProvenanceMismatch when the events do not describe ``text``.
    """
    toks = text.split(" ") if text else []
    pending = sorted(events, key=lambda e: e.sort_key)
    out: list[str] = []
    pos = 0
    k = 0
    while pos < len(toks):
        i = len(out)
        word_event = None
        while k < len(pending) and pending[k].word_index == i:
            e = pending[k]
            k += 1
            if e.kind.is_interjection:
                if e.original or not e.rendered:
                    raise ProvenanceMismatch(f"malformed interjection event {e}")
                span = e.rendered.split(" ")
                if toks[pos:pos + len(span)] != span:
                    raise ProvenanceMismatch(f"filler {e.rendered!r} not found at gap {i}")
                pos += len(span)
            elif word_event is not None:
                raise ProvenanceMismatch(f"two word events at index {i}")
            else:
                word_event = e
        if k < len(pending) and pending[k].word_index < i:
            raise ProvenanceMismatch(f"event out of order: {pending[k]}")
        if word_event is None:
            if pos >= len(toks):
                raise ProvenanceMismatch(f"text ends after filler at gap {i}")
            out.append(toks[pos])
            pos += 1
            continue
        if not _consistent(word_event):
            raise ProvenanceMismatch(f"event does not match its original: {word_event}")
        span = word_event.rendered.split(" ")
        if toks[pos:pos + len(span)] != span:
            raise ProvenanceMismatch(f"rendering {word_event.rendered!r} not found at word {i}")
        out.append(word_event.original)
        pos += len(span)
    if k != len(pending):
        raise ProvenanceMismatch(f"{len(pending) - k} events point past the end of the text")
    return " ".join(out)


def parse_config(data: Optional[dict[str, Any]], **overrides) -> AugmentationConfig:
    merged = dict(data or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return AugmentationConfig.from_dict(merged)
