"""Text normalization for profile strings and post content.

The normalization pass standardizes Unicode (NFKC + diacritic folding),
removes emoji, emoticons, markup, and non-sentential punctuation, collapses
long character repeats ("cooooool" -> "cool"), and optionally lowercases.
Full names in "Last, First" form can be reordered to "First Last".

All functions are pure; normalize_text is idempotent by construction (the
core pass runs to a fixpoint).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

# Codepoint ranges removed as emoji. Block-level ranges rather than the full
# emoji-data property: deterministic and independent of the unicodedata version.
_EMOJI_RANGES = (
    (0x1F000, 0x1F0FF),  # mahjong/domino/cards
    (0x1F300, 0x1F5FF),  # misc symbols and pictographs (incl. skin tones)
    (0x1F600, 0x1F64F),  # emoticons block
    (0x1F680, 0x1F6FF),  # transport
    (0x1F700, 0x1F77F),  # alchemical
    (0x1F900, 0x1F9FF),  # supplemental symbols and pictographs
    (0x1FA70, 0x1FAFF),  # symbols and pictographs extended-A
    (0x2600, 0x26FF),    # misc symbols
    (0x2700, 0x27BF),    # dingbats
    (0x2B00, 0x2BFF),    # misc symbols and arrows (stars etc.)
    (0xFE00, 0xFE0F),    # variation selectors
    (0x1F1E6, 0x1F1FF),  # regional indicators
)

# ASCII emoticons removed in addition to emoji codepoints. Only ":D"/":P"
# matter beyond punctuation stripping; the rest are kept for explicitness.
EMOTICONS = (":-)", ":)", ":(", ";)", ":D", ":P")

_MARKUP_RE = re.compile(r"<[^<>]*>")
_REPEAT_RE = re.compile(r"(.)\1{2,}", flags=re.DOTALL)
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizationConfig:
    """Independent switches for the normalization pass.

    apply_norm: Unicode standardization, emoji/emoticon/markup/punctuation
        removal, repeat collapsing.
    apply_lowercase: lowercase the result.
    reorder_full_name: rewrite "Last, First" to "First Last" before the rest
        of the pass (full-name fields only; never applied to usernames).
    """

    apply_norm: bool = True
    apply_lowercase: bool = True
    reorder_full_name: bool = False


def reorder_full_name(value: str) -> str:
    """Rewrite "<A>, <B>" (exactly one comma, both sides nonempty) to "<B> <A>".

    Anything else is returned unchanged.
    """
    if value.count(",") != 1:
        return value
    left, right = value.split(",")
    left = left.strip()
    right = right.strip()
    if not left or not right:
        return value
    return f"{right} {left}"


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def _strip_marks(value: str) -> str:
    decomposed = unicodedata.normalize("NFD", value)
    return "".join(ch for ch in decomposed if unicodedata.category(ch) != "Mn")


def _remove_emoticons(value: str) -> str:
    for pattern in sorted(EMOTICONS, key=len, reverse=True):
        value = value.replace(pattern, "")
    return value


def _clean_chars(value: str) -> str:
    """Drop emoji, punctuation, symbols, and control characters.

    Apostrophes between alphanumeric characters survive (contractions);
    all whitespace maps to a plain space.
    """
    out = []
    n = len(value)
    for i, ch in enumerate(value):
        if ch.isspace():
            out.append(" ")
            continue
        if _is_emoji(ch):
            continue
        cat = unicodedata.category(ch)
        if cat[0] in ("P", "S", "C"):
            if ch == "'" and 0 < i < n - 1 and value[i - 1].isalnum() and value[i + 1].isalnum():
                out.append(ch)
            continue
        out.append(ch)
    return "".join(out)


def _normalize_once(value: str, config: NormalizationConfig) -> str:
    if config.apply_norm:
        value = unicodedata.normalize("NFKC", value)
        value = _strip_marks(value)
        value = _MARKUP_RE.sub("", value)
        value = _remove_emoticons(value)
        value = _clean_chars(value)
    if config.apply_lowercase:
        value = value.lower()
    if config.apply_norm:
        value = _REPEAT_RE.sub(r"\1\1", value)
        value = _WS_RE.sub(" ", value).strip()
    return value


def normalize_text(value: str, config: NormalizationConfig | None = None) -> str:
    """Normalize a Unicode string per `config`; accepts any input, may return "".

    Idempotent: the core pass is iterated until the string stops changing
    (removals can expose new repeats or compositions, so one pass is not
    guaranteed to be a fixpoint on adversarial input).
    """
    if config is None:
        config = NormalizationConfig()
    if config.reorder_full_name:
        value = reorder_full_name(value)
    for _ in range(8):
        new = _normalize_once(value, config)
        if new == value:
            return new
        value = new
    return value
