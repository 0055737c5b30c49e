"""Text normalization pipeline: cleaning, sentence split, tokens, stopwords, lemmas.

The stages are deliberately simple and rule-based so every step stays
inspectable: a message goes in, and what comes out is a cleaned string,
sentence segments, a flat token stream with character spans, the indices of
the content-bearing tokens, and a lemma for every token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"

TOKEN_RE = re.compile(r"[^\W\d_]+|\d+", re.UNICODE)

SENTENCE_TERMINATORS = ".!?"

VOWELS = "aeiou"

# consonants that stay doubled when an -ing/-ed suffix is removed
KEEP_DOUBLED = "lsz"


@dataclass(frozen=True)
class Token:
    """One token: lowercase surface, original surface, char span, sentence."""

    surface: str
    raw_surface: str
    char_span: tuple[int, int]
    sentence_index: int


@dataclass
class ProcessedText:
    message_id: str
    cleaned: str
    sentences: list[str]
    tokens: list[Token]
    content_indices: list[int] = field(default_factory=list)
    lemmas: list[str] = field(default_factory=list)


@lru_cache(maxsize=8)
def load_stopwords(path: str | None = None) -> frozenset[str]:
    p = Path(path) if path else DATA_DIR / "stopwords.txt"
    words = set()
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


@lru_cache(maxsize=8)
def load_irregular_lemmas(path: str | None = None) -> dict[str, str]:
    p = Path(path) if path else DATA_DIR / "irregular_lemmas.tsv"
    table = {}
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        form, _, lemma = line.partition("\t")
        if form and lemma:
            table[form] = lemma
    return table


def clean_text(raw: str) -> str:
    """Strip punctuation and collapse whitespace; case is preserved.

    Apostrophes survive, as do ':' and '/' when both neighbours are digits
    (clock times like 18:00 and numeric dates like 1/8 must stay intact).
    Everything else non-alphanumeric becomes a space.
    """
    text = raw.replace("’", "'")
    out = []
    for i, ch in enumerate(text):
        if ch.isalnum() or ch == "'":
            out.append(ch)
        elif ch in ":/" and 0 < i < len(text) - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
            out.append(ch)
        else:
            out.append(" ")
    return " ".join("".join(out).split())


def _is_abbreviation_period(text: str, i: int) -> bool:
    # Collect the letter run immediately before the period.
    j = i
    while j > 0 and text[j - 1].isalpha():
        j -= 1
    word = text[j:i]
    if len(word) == 1:
        return True
    if word.lower() in ("am", "pm"):
        k = j
        while k > 0 and text[k - 1] == " ":
            k -= 1
        return k > 0 and text[k - 1].isdigit()
    return False


def segment_sentences(raw: str) -> list[str]:
    """Split raw text into cleaned sentences.

    '.', '!', '?' and newlines terminate a sentence, except a period right
    after a single letter or after am/pm that follows a digit ("6 p.m.").
    Segments that clean down to nothing are dropped.
    """
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    segments: list[str] = []
    buf: list[str] = []

    def flush() -> None:
        if buf:
            cleaned = clean_text("".join(buf))
            if cleaned:
                segments.append(cleaned)
            buf.clear()

    for i, ch in enumerate(text):
        if ch == "\n":
            flush()
        elif ch in SENTENCE_TERMINATORS:
            if ch == "." and _is_abbreviation_period(text, i):
                buf.append(ch)
            else:
                flush()
        else:
            buf.append(ch)
    flush()
    return segments


def tokenize(sentence: str, sentence_index: int = 0) -> list[Token]:
    """Split a cleaned sentence into letter-only / digit-only tokens.

    Any non-alphanumeric character separates tokens, and so does a boundary
    between letters and digits: "brother's" -> brother, s and "6pm" -> 6, pm.
    """
    tokens = []
    for m in TOKEN_RE.finditer(sentence):
        raw = m.group()
        tokens.append(
            Token(
                surface=raw.lower(),
                raw_surface=raw,
                char_span=(m.start(), m.end()),
                sentence_index=sentence_index,
            )
        )
    return tokens


def remove_stopwords(tokens: list[Token], stopwords: frozenset[str] | None = None) -> list[int]:
    """Return the indices of tokens that are not stopwords.

    The token list itself is never rewritten; later stages that need the
    full stream (temporal scanning in particular) keep their offsets.
    """
    sw = stopwords if stopwords is not None else load_stopwords()
    return [i for i, tok in enumerate(tokens) if tok.surface not in sw]


def _fix_stem(stem: str) -> str:
    # Undo consonant doubling (planning -> plan) but keep ll/ss/zz pairs,
    # then restore a dropped final e after a consonant-vowel-consonant tail
    # (inviting -> invit -> invite).
    if (
        len(stem) >= 2
        and stem[-1] == stem[-2]
        and stem[-1] not in VOWELS
        and stem[-1] not in KEEP_DOUBLED
    ):
        return stem[:-1]
    if (
        len(stem) >= 3
        and stem[-1] not in VOWELS + "wxy"
        and stem[-2] in VOWELS
        and stem[-3] not in VOWELS
    ):
        return stem + "e"
    return stem


def lemmatize(word: str, irregulars: dict[str, str] | None = None) -> str:
    """Reduce a token surface to its dictionary form.

    The irregular table wins first; after that a short ordered list of
    suffix rules applies. Numbers and short or unknown words pass through
    unchanged, so the function is idempotent.
    """
    table = irregulars if irregulars is not None else load_irregular_lemmas()
    if word.isdigit():
        return word
    if word in table:
        return table[word]
    if len(word) <= 3:
        return word
    if word.endswith("ies") and len(word) >= 5:
        return word[:-3] + "y"
    if word.endswith(("sses", "xes", "zes", "ches", "shes", "oes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    if word.endswith("ing") and len(word) >= 6:
        return _fix_stem(word[:-3])
    if word.endswith("ed") and len(word) >= 5:
        return _fix_stem(word[:-2])
    return word


def process_text(
    message_id: str,
    raw: str,
    stopwords: frozenset[str] | None = None,
    irregulars: dict[str, str] | None = None,
) -> ProcessedText:
    """Run the whole pipeline over one message."""
    sentences = segment_sentences(raw)
    tokens: list[Token] = []
    for idx, sentence in enumerate(sentences):
        tokens.extend(tokenize(sentence, idx))
    content = remove_stopwords(tokens, stopwords)
    lemmas = [lemmatize(tok.surface, irregulars) for tok in tokens]
    return ProcessedText(
        message_id=message_id,
        cleaned=clean_text(raw),
        sentences=sentences,
        tokens=tokens,
        content_indices=content,
        lemmas=lemmas,
    )
