"""Word-level tokenizer aware of the context serialization tags."""

import re
from typing import List, Sequence

from ..config.settings import SpecialTokens

_TAG_PATTERN = "|".join(re.escape(tag) for tag in sorted(SpecialTokens.TAGS, key=len, reverse=True))
# Punctuation between two word characters (10:00, 3.50, don't, cambridge-bound) stays inside the word
_WORD_PATTERN = r"\w+(?:[.:'\-/]\w+)*"
_TOKEN_RE = re.compile(rf"{_TAG_PATTERN}|{_WORD_PATTERN}|[^\w\s]")
_TAG_RE = re.compile(_TAG_PATTERN)
_TAGS = frozenset(SpecialTokens.TAGS)

# Punctuation that attaches to the previous token when detokenizing
_CLOSING_RE = re.compile(r" ([.,!?;:%)\]}])")
_OPENING_RE = re.compile(r"([(\[{$]) ")


def tokenize(text: str) -> List[str]:
    """Lowercased words and single punctuation marks; tags stay whole and keep their case."""
    return [tok if tok in _TAGS else tok.lower() for tok in _TOKEN_RE.findall(text)]


def detokenize(tokens: Sequence[str]) -> str:
    """
    Join tokens, re-attaching punctuation.

    For text whose punctuation follows words and precedes spaces (the
    corpus convention), ``detokenize(tokenize(t))`` equals ``t`` lowercased
    with whitespace collapsed.
    """
    text = " ".join(tokens)
    text = _CLOSING_RE.sub(r"\1", text)
    return _OPENING_RE.sub(r"\1", text)


def strip_tags(text: str) -> str:
    """Remove serialization tags and collapse whitespace."""
    return " ".join(_TAG_RE.sub(" ", text).split())
