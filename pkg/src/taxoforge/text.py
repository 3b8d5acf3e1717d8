"""Phrase normalization and tokenization shared by every module.

All labels, corpus tokens, queries and insights pass through
:func:`normalize_phrase` before they are compared, stored or embedded, so
string equality downstream is equality of normalized forms.
"""

import unicodedata

__all__ = ["normalize_phrase", "tokenize", "char_trigrams"]


def normalize_phrase(raw: str) -> str:
    """Canonical form of a phrase.

    NFC-normalize, lowercase, keep only letters, decimal digits, spaces and
    the ASCII hyphen-minus, collapse whitespace runs to single spaces and
    strip the ends. Returns "" when nothing survives; callers treat an
    empty result as invalid.
    """
    text = unicodedata.normalize("NFC", raw).lower()
    kept = []
    for ch in text:
        if ch.isspace():
            kept.append(" ")
            continue
        cat = unicodedata.category(ch)
        if cat.startswith("L") or cat == "Nd" or ch == "-":
            kept.append(ch)
    return " ".join("".join(kept).split())


def tokenize(line: str) -> list[str]:
    """Normalized tokens of a line; empty list when nothing survives."""
    return normalize_phrase(line).split()


def char_trigrams(phrase: str) -> set[str]:
    """Set of length-3 character substrings (spaces included)."""
    return {phrase[i : i + 3] for i in range(len(phrase) - 2)}
