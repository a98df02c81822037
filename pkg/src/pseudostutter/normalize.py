"""Text normalization shared by references, hypotheses and augmentation input."""

from __future__ import annotations

import re
import unicodedata

# dash-like characters folded to an ASCII hyphen before filtering
_DASHES = dict.fromkeys(map(ord, "‐‑‒–—−"), "-")
_HYPHEN_RUN = re.compile(r"-{2,}")


def _keep(ch: str) -> bool:
    if ch == "-" or ch.isspace() or ch.isalnum():
        return True
    # combining marks belong to the preceding letter
    return unicodedata.category(ch)[0] == "M"


def _clean_token(token: str) -> str:
    token = _HYPHEN_RUN.sub("-", token).strip("-")
    # a token made only of combining marks is not a word
    if token and all(unicodedata.category(c)[0] == "M" or c == "-" for c in token):
        return ""
    return token


def normalize_text(raw: str) -> str:
    """Lowercase, drop punctuation, collapse and trim whitespace.

    Hyphens survive only inside a word (``sapi-sapi``); everything else that
    is not a letter, digit, combining mark or whitespace is deleted.
    """
    text = raw.lower().translate(_DASHES)
    text = "".join(ch for ch in text if _keep(ch))
    tokens = (_clean_token(t) for t in text.split())
    return " ".join(t for t in tokens if t)


def tokens(text: str) -> list[str]:
    return text.split()
