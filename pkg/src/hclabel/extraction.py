"""Noun-phrase term extraction from bibliographic fields.

A term is a maximal run of adjectives and nouns that ends with a noun,
normalized to lowercase ASCII alphanumerics separated by single spaces,
with every token singularized.  Occurrence is binary per publication.

The built-in tagger is lexicon based: a token found in the lexicon gets
its listed tag, otherwise suffix heuristics decide between adjective and
other, and anything left over is a noun.  Records may instead carry
pre-extracted terms (``mode="pretagged"``) produced by an external tagger.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import FIELD_ORDER, FieldSet, PublicationRecord, field_view
from .errors import HCLabelError

BUILTIN = "builtin"
PRETAGGED = "pretagged"


class ExtractionError(HCLabelError):
    """A record cannot be processed in the requested extraction mode."""


class Pos(str, enum.Enum):
    NOUN = "noun"
    ADJECTIVE = "adjective"
    OTHER = "other"


_TAG_CODES = {"N": Pos.NOUN, "J": Pos.ADJECTIVE, "O": Pos.OTHER}


@dataclass(frozen=True)
class TaggedToken:
    text: str
    pos: Pos


# ---------------------------------------------------------------- normalize

_APOSTROPHES = re.compile(r"['’ʼ]")
_NON_ALNUM = re.compile(r"[^a-z0-9]+")
# Segment boundaries: anything that is not a word character, whitespace,
# hyphen (incl. unicode hyphens / en dash) or apostrophe.
_BOUNDARY = re.compile(r"[^\w\s\-‐‑‒–'’ʼ]|_")


def _fold(raw: str) -> str:
    if raw.isascii():
        return raw
    decomposed = unicodedata.normalize("NFKD", raw)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize(raw: str) -> str:
    """Lowercase, de-hyphenate and reduce text to ``[a-z0-9]`` words.

    Hyphens and every other non-alphanumeric character become spaces;
    apostrophes are dropped (``"Crohn's"`` -> ``"crohns"``) and accents are
    folded to their base letter.
    """
    text = _APOSTROPHES.sub("", _fold(raw)).lower()
    return _NON_ALNUM.sub(" ", text).strip()


def split_segments(raw: str) -> list[str]:
    """Split raw text at punctuation that delimits phrases.

    Hyphens and apostrophes stay inside words; commas, slashes, brackets,
    ampersands and the like end a phrase.  Segments are returned normalized,
    empty ones dropped.
    """
    out = []
    for part in _BOUNDARY.split(raw):
        norm = normalize(part)
        if norm:
            out.append(norm)
    return out


# --------------------------------------------------------------- lemmatize

def _read_tsv_pairs(text: str) -> dict[str, str]:
    pairs = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("\t")
        if not sep:
            raise ValueError(f"expected a tab-separated pair: {line!r}")
        pairs[key.strip()] = value.strip()
    return pairs


def _data_text(name: str) -> str:
    return resources.files("hclabel").joinpath("data").joinpath(name).read_text(encoding="utf-8")


class Lemmatizer:
    """Rule-based English noun singularizer with an exception table."""

    def __init__(self, exceptions: Mapping[str, str]):
        self.exceptions = dict(exceptions)
        self._cache: dict[str, str] = {}

    @classmethod
    def from_file(cls, path) -> "Lemmatizer":
        return cls(_read_tsv_pairs(Path(path).read_text(encoding="utf-8")))

    def __call__(self, token: str) -> str:
        try:
            return self._cache[token]
        except KeyError:
            lemma = self._cache[token] = self._singularize(token)
            return lemma

    def __getstate__(self):
        return {"exceptions": self.exceptions}

    def __setstate__(self, state):
        self.exceptions = state["exceptions"]
        self._cache = {}

    def _singularize(self, t: str) -> str:
        if t in self.exceptions:
            return self.exceptions[t]
        if len(t) <= 3 or not t.endswith("s") or t.endswith(("ss", "us", "is")):
            return t
        if t.endswith("ies") and len(t) > 4:
            return t[:-3] + "y"
        if t.endswith(("sses", "shes", "ches", "xes", "zzes")):
            return t[:-2]
        return t[:-1]


@lru_cache(maxsize=None)
def default_lemmatizer() -> Lemmatizer:
    return Lemmatizer(_read_tsv_pairs(_data_text("lemma_exceptions.tsv")))


def lemmatize_token(token: str) -> str:
    """Singularize one lowercase alphanumeric token (``films`` -> ``film``)."""
    return default_lemmatizer()(token)


# ---------------------------------------------------------------------- tag

_ADJ_SUFFIXES = ("al", "ic", "ous", "ive", "able", "ible", "ful", "less", "ary", "ory", "ular", "ish")
_OTHER_SUFFIXES = ("ing", "ed", "ly")


class PosLexicon:
    """Token -> coarse part of speech, with suffix fallback.

    Unknown tokens default to noun so that unfamiliar domain vocabulary is
    kept as candidate term material.
    """

    def __init__(self, entries: Mapping[str, Pos]):
        self.entries = dict(entries)
        self._cache: dict[str, Pos] = {}

    def __getstate__(self):
        return {"entries": self.entries}

    def __setstate__(self, state):
        self.__init__(state["entries"])

    @classmethod
    def parse(cls, text: str) -> "PosLexicon":
        entries = {}
        for token, code in _read_tsv_pairs(text).items():
            try:
                entries[token] = _TAG_CODES[code.upper()]
            except KeyError:
                raise ValueError(f"unknown tag {code!r} for {token!r}; expected N, J or O") from None
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "PosLexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def tag(self, token: str) -> Pos:
        pos = self._cache.get(token)
        if pos is None:
            pos = self._cache[token] = self._tag(token)
        return pos

    def _tag(self, token: str) -> Pos:
        pos = self.entries.get(token)
        if pos is not None:
            return pos
        if token.isdigit():
            return Pos.OTHER
        n = len(token)
        for suffix in _ADJ_SUFFIXES:
            if token.endswith(suffix) and n > len(suffix) + 2:
                return Pos.ADJECTIVE
        for suffix in _OTHER_SUFFIXES:
            if token.endswith(suffix) and n > len(suffix) + 2:
                return Pos.OTHER
        return Pos.NOUN


@lru_cache(maxsize=None)
def default_lexicon() -> PosLexicon:
    return PosLexicon.parse(_data_text("pos_lexicon.tsv"))


def tag_tokens(text: str, lexicon: PosLexicon | None = None) -> list[TaggedToken]:
    lexicon = lexicon or default_lexicon()
    return [TaggedToken(tok, lexicon.tag(tok)) for tok in text.split()]


# -------------------------------------------------------------------- chunk

def chunk_noun_phrases(tokens: Iterable[TaggedToken], lemmatizer: Lemmatizer | None = None) -> list[str]:
    """Return every maximal adjective/noun run, cut back to its last noun."""
    lemmatizer = lemmatizer or default_lemmatizer()
    terms: list[str] = []
    run: list[TaggedToken] = []

    def flush():
        last_noun = max((i for i, t in enumerate(run) if t.pos is Pos.NOUN), default=-1)
        if last_noun >= 0:
            terms.append(" ".join(lemmatizer(t.text) for t in run[: last_noun + 1]))
        run.clear()

    for tok in tokens:
        if tok.pos is Pos.OTHER:
            flush()
        else:
            run.append(tok)
    flush()
    return terms


def normalize_term(raw: str, lemmatizer: Lemmatizer | None = None) -> str:
    """Normalize a whole phrase as a term: normalize, then singularize each word."""
    lemmatizer = lemmatizer or default_lemmatizer()
    return " ".join(lemmatizer(tok) for tok in normalize(raw).split())


def load_term_list(path) -> frozenset[str]:
    """Read a one-term-per-line file (``#`` comments allowed) as normalized terms."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            term = normalize_term(line)
            if term:
                terms.add(term)
    return frozenset(terms)


@lru_cache(maxsize=None)
def default_address_stopwords() -> frozenset[str]:
    return frozenset(
        normalize_term(line)
        for line in _data_text("address_stopwords.txt").splitlines()
        if line.strip() and not line.startswith("#")
    )


# ------------------------------------------------------------------ extract

class Extractor:
    """Per-record term extraction with fixed tagger, lemmatizer and stop words.

    Instances are picklable so extraction can be farmed out to worker processes.
    """

    def __init__(
        self,
        mode: str = BUILTIN,
        lexicon: PosLexicon | None = None,
        lemmatizer: Lemmatizer | None = None,
        address_stopwords: Iterable[str] | None = None,
    ):
        if mode not in (BUILTIN, PRETAGGED):
            raise ValueError(f"unknown extraction mode {mode!r}")
        self.mode = mode
        self.lexicon = lexicon or default_lexicon()
        self.lemmatizer = lemmatizer or default_lemmatizer()
        if address_stopwords is None:
            address_stopwords = default_address_stopwords()
        self.address_stopwords = frozenset(address_stopwords)
        self._stop_tokens = frozenset(s for s in self.address_stopwords if " " not in s)

    def text_terms(self, field: str, text: str) -> list[str]:
        """Terms of one raw field value, in order of appearance."""
        terms: list[str] = []
        for segment in split_segments(text):
            tagged = tag_tokens(segment, self.lexicon)
            if field == "keywords" and tagged[-1].pos is Pos.ADJECTIVE:
                # a keyword is a nominal phrase; an adjective in head position is used as a noun
                tagged[-1] = TaggedToken(tagged[-1].text, Pos.NOUN)
            elif field == "addresses" and self._stop_tokens:
                tagged = [
                    TaggedToken(t.text, Pos.OTHER) if self.lemmatizer(t.text) in self._stop_tokens else t
                    for t in tagged
                ]
            terms.extend(chunk_noun_phrases(tagged, self.lemmatizer))
        if field == "addresses":
            terms = [t for t in terms if t not in self.address_stopwords]
        return terms

    def field_terms(self, record: PublicationRecord, fields) -> dict[str, set[str]]:
        """Deduplicated terms per selected field."""
        fields = fields if isinstance(fields, FieldSet) else FieldSet(fields)
        out: dict[str, set[str]] = {}
        if self.mode == PRETAGGED:
            for name, _ in field_view(record, fields):
                if name in out:
                    continue
                supplied = (record.pretagged_terms or {}).get(name)
                if supplied is None:
                    raise ExtractionError(f"record {record.id!r}: no pretagged terms for field {name!r}")
                terms = {normalize_term(t, self.lemmatizer) for t in supplied}
                terms.discard("")
                if name == "addresses":
                    terms -= self.address_stopwords
                out[name] = terms
            return out
        for name, text in field_view(record, fields):
            out.setdefault(name, set()).update(self.text_terms(name, text))
        return out

    def terms(self, record: PublicationRecord, fields) -> frozenset[str]:
        found: set[str] = set()
        for terms in self.field_terms(record, fields).values():
            found |= terms
        return frozenset(found)


def extract_terms(
    record: PublicationRecord,
    fields,
    mode: str = BUILTIN,
    address_stopwords: Iterable[str] | None = None,
    lexicon: PosLexicon | None = None,
) -> frozenset[str]:
    """Set of terms occurring in the selected fields of one publication."""
    return Extractor(mode, lexicon=lexicon, address_stopwords=address_stopwords).terms(record, fields)


def is_single_noun_phrase(label: str, lexicon: PosLexicon | None = None) -> bool:
    """True when ``label`` chunks to exactly one term spanning the whole label."""
    segments = split_segments(label)
    if len(segments) != 1:
        return False
    terms = chunk_noun_phrases(tag_tokens(segments[0], lexicon))
    return len(terms) == 1 and terms[0] == normalize_term(segments[0])


__all__ = [
    "BUILTIN",
    "PRETAGGED",
    "FIELD_ORDER",
    "ExtractionError",
    "Extractor",
    "Lemmatizer",
    "Pos",
    "PosLexicon",
    "TaggedToken",
    "chunk_noun_phrases",
    "default_address_stopwords",
    "default_lemmatizer",
    "default_lexicon",
    "extract_terms",
    "is_single_noun_phrase",
    "lemmatize_token",
    "load_term_list",
    "normalize",
    "normalize_term",
    "split_segments",
    "tag_tokens",
]
