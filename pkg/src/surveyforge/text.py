"""Sentence splitting and word tokenization.

Both routines are rule based and fully deterministic: identical input yields
identical output on every platform. Downstream metrics, alignment, and
round-trip serialization all rely on that, so neither routine may consult
locale, models, or external data.

The splitter must give the same boundaries on raw and on lowercased text,
because stored corpus records are lowercased and get re-split on reload.
It therefore never uses capitalization cues.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# Detached from token edges one character at a time. Internal occurrences
# (hyphens in "state-of-the-art", periods/commas in "3.5" or "1,024",
# apostrophes in "don't") are kept.
_EDGE_PUNCT = frozenset(
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
    "–—‘’“”…"
)

# Lowercased final chunks that do not end a sentence. "al." covers "et al.".
_ABBREVIATIONS = frozenset({
    "al.", "e.g.", "i.e.", "cf.", "etc.", "vs.", "resp.", "ca.", "approx.",
    "fig.", "figs.", "eq.", "eqs.", "sec.", "secs.", "ref.", "refs.",
    "tab.", "no.", "nos.", "vol.", "vols.", "pp.", "dr.", "prof.",
    "mr.", "mrs.", "ms.", "st.", "jr.", "sr.", "inc.", "ltd.",
    "u.s.", "u.k.", "a.k.a.", "w.r.t.", "i.i.d.",
})

_SINGLE_INITIAL = re.compile(r"^[a-z]\.$")

# Candidate boundary: sentence-final punctuation, optional closing
# quotes/brackets, then whitespace.
_BOUNDARY = re.compile(r"[.!?]+['\"\)\]]*\s+")

_WRAPPERS = "'\"()[]"


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into word tokens.

    Whitespace separates chunks; leading and trailing punctuation is detached
    from each chunk into standalone single-character tokens, in original
    left-to-right order. Empty input gives an empty list.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        head: list[str] = []
        tail: list[str] = []
        i, j = 0, len(chunk)
        while i < j and chunk[i] in _EDGE_PUNCT:
            head.append(chunk[i])
            i += 1
        while j > i and chunk[j - 1] in _EDGE_PUNCT:
            tail.append(chunk[j - 1])
            j -= 1
        tokens.extend(head)
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(reversed(tail))
    return tokens


def _protected(prefix: str) -> bool:
    """True if the text ending at a candidate boundary must not be split."""
    last = prefix.rsplit(" ", 1)[-1].lower()
    last = last.strip(_WRAPPERS)
    if last in _ABBREVIATIONS:
        return True
    return bool(_SINGLE_INITIAL.match(last))


def split_sentences(text: str) -> list[str]:
    """Split raw text into sentences.

    Boundaries sit after sentence-final punctuation (plus any closing quote
    or bracket) followed by whitespace, unless the preceding chunk is a known
    abbreviation ("et al.", "fig.", "e.g.", ...) or a single-letter initial.
    Whitespace runs are collapsed to single spaces, so joining the result
    with single spaces reproduces the input modulo whitespace.
    """
    collapsed = " ".join(text.split())
    if not collapsed:
        return []
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(collapsed):
        end = match.end() - 1  # boundary whitespace is a single space
        candidate = collapsed[start:end]
        if _protected(candidate):
            continue
        sentences.append(candidate)
        start = match.end()
    if start < len(collapsed):
        sentences.append(collapsed[start:])
    return sentences


@dataclass(frozen=True)
class SentenceRecord:
    """A normalized sentence: lowercased text plus its word tokens.

    Invariant: ``tokens == tuple(tokenize(text))`` and ``text`` carries no
    leading/trailing whitespace.
    """

    text: str
    tokens: tuple[str, ...] = field(default=())

    @classmethod
    def from_raw(cls, raw: str) -> "SentenceRecord":
        text = " ".join(raw.lower().split())
        return cls(text=text, tokens=tuple(tokenize(text)))

    @classmethod
    def from_tokens(cls, tokens: list[str] | tuple[str, ...]) -> "SentenceRecord":
        # Tokens never carry whitespace or edge punctuation attached to a
        # core, so joining with single spaces re-tokenizes to the same list.
        return cls(text=" ".join(tokens), tokens=tuple(tokens))


def normalize_sentences(raw: str) -> list[SentenceRecord]:
    """Split raw text into sentences and normalize each one."""
    return [SentenceRecord.from_raw(s) for s in split_sentences(raw)]
