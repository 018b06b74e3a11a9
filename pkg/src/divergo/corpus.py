"""Phrase corpus construction: tag-pattern chunking and the four filter rules.

Input sentences arrive pre-tagged with a coarse tag set. Chunking matches
fixed grammatical patterns over the tag sequence:

    NP: optional DET + ADJ* + NOUN+
    VP: VERB+ optionally followed by ADP VERB  (e.g. "helps to improve")
    PP: ADP + NP
    NV: NP immediately followed by VP
    VN: VP immediately followed by NP

Filtering then keeps phrases whose words are all dictionary words, whose word
count lies in [min_words, max_words], that mention at least one domain-lexicon
word, and that are not sub-phrases or overlapping shorter variants of a kept
longer phrase.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusFormatError, DuplicateIdError

TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "INTJ", "OTHER")

PHRASE_KINDS = ("NP", "VP", "PP", "NV", "VN")

# One char per tag so spans can be found with regexes over the tag string.
_TAG_CHAR = {
    "NOUN": "N",
    "VERB": "V",
    "ADJ": "J",
    "ADV": "R",
    "PRON": "O",
    "DET": "D",
    "ADP": "P",
    "INTJ": "I",
    "OTHER": "X",
}

_NP = r"D?J*N+"
_VP = r"V+(?:PV)?"
_PP = rf"P(?:{_NP})"

_BASE_PATTERNS = (("NP", re.compile(_NP)), ("VP", re.compile(_VP)), ("PP", re.compile(_PP)))


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    tag: str

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}, expected one of {TAGS}")


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[TaggedToken, ...]
    source_id: str

    def __init__(self, tokens: Iterable[TaggedToken], source_id: str):
        tokens = tuple(tokens)
        if not tokens:
            raise ValueError("sentence must have at least one token")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "source_id", source_id)


@dataclass(frozen=True)
class Phrase:
    """A candidate prompt fragment: contiguous tagged tokens of one kind."""

    id: str
    text: str
    tokens: tuple[TaggedToken, ...]
    kind: str

    def __init__(self, id: str, text: str, tokens: Iterable[TaggedToken], kind: str):
        tokens = tuple(tokens)
        if kind not in PHRASE_KINDS:
            raise ValueError(f"unknown phrase kind {kind!r}")
        joined = " ".join(t.surface for t in tokens)
        if text != joined:
            raise ValueError(f"text {text!r} does not equal joined surfaces {joined!r}")
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "kind", kind)

    @property
    def words(self) -> list[str]:
        return self.text.split()


@dataclass
class FilterConfig:
    """Word lists and length bounds for the four filter rules."""

    dictionary: frozenset[str]
    domain_lexicon: frozenset[str]
    min_words: int = 3
    max_words: int = 5

    def __post_init__(self):
        self.dictionary = frozenset(self.dictionary)
        self.domain_lexicon = frozenset(self.domain_lexicon)
        if self.min_words < 1 or self.max_words < 1:
            raise ValueError("word-count bounds must be >= 1")
        if self.min_words > self.max_words:
            raise ValueError("min_words must be <= max_words")


def _make_phrase(sentence_key: str, tokens: Sequence[TaggedToken], start: int, end: int, kind: str) -> Phrase:
    span = tokens[start:end]
    return Phrase(
        id=f"{sentence_key}:{start}-{end}:{kind}",
        text=" ".join(t.surface for t in span),
        tokens=span,
        kind=kind,
    )


def chunk_phrases(sentences: Sequence[TaggedSentence]) -> list[Phrase]:
    """Extract all maximal NP/VP/PP spans plus adjoining NV/VN combinations.

    A base span contained inside another base span is dropped (e.g. the NP
    within a PP), then every NP immediately followed by a VP yields an NV
    phrase and every VP immediately followed by an NP yields a VN phrase.
    Output order is deterministic: sentence order, then span start, then
    span end, then kind.
    """
    phrases: list[Phrase] = []
    for sent_idx, sentence in enumerate(sentences):
        tag_string = "".join(_TAG_CHAR[t.tag] for t in sentence.tokens)
        # Longest match of each pattern at every start position; finditer
        # would miss overlapping maximal spans (e.g. VP over "V P V P V").
        spans: list[tuple[int, int, str]] = []
        for kind, pattern in _BASE_PATTERNS:
            for start in range(len(tag_string)):
                match = pattern.match(tag_string, start)
                if match and match.end() > match.start():
                    spans.append((match.start(), match.end(), kind))
        # Keep only maximal base spans: drop any span contained in another.
        maximal = [
            (s, e, k)
            for (s, e, k) in spans
            if not any((s2 <= s and e <= e2 and (s2, e2) != (s, e)) for (s2, e2, _) in spans)
        ]
        nps = sorted((s, e) for (s, e, k) in maximal if k == "NP")
        vps = sorted((s, e) for (s, e, k) in maximal if k == "VP")
        combined: list[tuple[int, int, str]] = []
        for s, e in nps:
            for s2, e2 in vps:
                if s2 == e:
                    combined.append((s, e2, "NV"))
        for s, e in vps:
            for s2, e2 in nps:
                if s2 == e:
                    combined.append((s, e2, "VN"))
        key = f"{sentence.source_id}:{sent_idx}"
        kind_rank = {k: r for r, k in enumerate(PHRASE_KINDS)}
        for s, e, k in sorted(maximal + combined, key=lambda t: (t[0], t[1], kind_rank[t[2]])):
            phrases.append(_make_phrase(key, sentence.tokens, s, e, k))
    return phrases


def _shares_bigram(a: Sequence[str], b: Sequence[str]) -> bool:
    """True when the two word sequences share any contiguous word pair."""
    bigrams_a = {(a[i], a[i + 1]) for i in range(len(a) - 1)}
    return any((b[i], b[i + 1]) in bigrams_a for i in range(len(b) - 1))


def filter_phrases(phrases: Sequence[Phrase], cfg: FilterConfig) -> list[Phrase]:
    """Apply the four filter rules; output keeps the input order.

    1. every word (lowercased) must be in cfg.dictionary;
    2. word count within [min_words, max_words];
    3. at least one word in cfg.domain_lexicon;
    4. a phrase overlapping a longer retained phrase is dropped. Overlap means
       sharing a contiguous word pair, which covers both exact sub-phrases and
       shorter variants that share a word run; equal-length collisions keep
       the earlier-ingested phrase.
    """
    candidates: list[tuple[int, Phrase, list[str]]] = []
    for idx, phrase in enumerate(phrases):
        words = [w.lower() for w in phrase.words]
        if not all(w in cfg.dictionary for w in words):
            continue
        if not (cfg.min_words <= len(words) <= cfg.max_words):
            continue
        if not any(w in cfg.domain_lexicon for w in words):
            continue
        candidates.append((idx, phrase, words))

    # Rule 4: consider longer phrases first (earlier-ingested wins ties).
    accepted: list[tuple[int, Phrase, list[str]]] = []
    for entry in sorted(candidates, key=lambda t: (-len(t[2]), t[0])):
        _, _, words = entry
        if any(_shares_bigram(kept_words, words) for (_, _, kept_words) in accepted):
            continue
        accepted.append(entry)
    accepted.sort(key=lambda t: t[0])
    return [phrase for (_, phrase, _) in accepted]


# ---------------------------------------------------------------------------
# File formats (JSONL, one object per line):
#   tagged sentences: {"source_id": str, "tokens": [["surface", "TAG"], ...]}
#   corpus:           {"id": str, "text": str, "kind": str, "tokens": [...]}
# Dictionary / lexicon files: one lowercase word per line, UTF-8.
# ---------------------------------------------------------------------------


def load_tagged_sentences(path: str | Path) -> list[TaggedSentence]:
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tokens = [TaggedToken(surface, tag) for surface, tag in obj["tokens"]]
                sentences.append(TaggedSentence(tokens, obj["source_id"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(str(path), line_no, f"bad sentence line: {exc}") from exc
    return sentences


def load_corpus(path: str | Path) -> list[Phrase]:
    phrases: list[Phrase] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tokens = [TaggedToken(surface, tag) for surface, tag in obj["tokens"]]
                phrase = Phrase(obj["id"], obj["text"], tokens, obj["kind"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(str(path), line_no, f"bad phrase line: {exc}") from exc
            if phrase.id in seen:
                raise DuplicateIdError(phrase.id)
            seen.add(phrase.id)
            phrases.append(phrase)
    return phrases


def store_corpus(phrases: Sequence[Phrase], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for phrase in phrases:
            obj = {
                "id": phrase.id,
                "text": phrase.text,
                "kind": phrase.kind,
                "tokens": [[t.surface, t.tag] for t in phrase.tokens],
            }
            fh.write(json.dumps(obj) + "\n")


def load_wordlist(path: str | Path) -> frozenset[str]:
    """One lowercase word per line; blank lines ignored."""
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())
