"""Seeded synthetic corpora with planted gold labels.

Classes are spread over ``depth`` levels, the number per level growing
geometrically; publications are assigned directly to the deepest classes
and reach ancestors through rollup.  Every class gets a pseudo-word label
that is planted into ``plant_rate`` of its members (in the fields given for
its level) and into ``background_rate`` of the other publications.  All
other text is filler drawn uniformly from a pseudo-word vocabulary, so
planted labels are the only terms concentrated in a class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .corpus import Corpus, PublicationRecord
from .extraction import Pos, default_lemmatizer, default_lexicon
from .hierarchy import Hierarchy, HierarchyOptions, from_records

_ONSETS = "bdfgklmnprtvz"
_VOWELS = "aeiou"
_CODAS = "kmnptxz"
_CONNECTORS = ("of", "in", "and", "for", "with", "on")


@dataclass(frozen=True)
class SyntheticParams:
    n_classes: int = 50
    depth: int = 3
    pubs_per_class: int = 100
    vocab_size: int = 500
    plant_rate: float = 0.8
    background_rate: float = 0.01
    fillers_per_pub: int = 4
    level_ratio: float = 4.0
    # level -> fields receiving that level's planted labels; missing levels use ("title",)
    plant_fields: Mapping[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("n_classes", "depth", "pubs_per_class", "vocab_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.depth > self.n_classes:
            raise ValueError("need at least one class per level")
        for name in ("plant_rate", "background_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def fields_for(self, level: int) -> tuple[str, ...]:
        return tuple(self.plant_fields.get(level, ("title",)))


def level_counts(n_classes: int, depth: int, ratio: float = 4.0) -> list[int]:
    """Classes per level: geometric weights, largest-remainder rounding, at least one each."""
    weights = np.array([ratio**i for i in range(depth)], dtype=float)
    spare = n_classes - depth
    raw = spare * weights / weights.sum()
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts), kind="stable")[: spare - counts.sum()]:
        counts[i] += 1
    counts += 1
    for i in range(1, depth):  # every non-deepest class needs a child
        while counts[i] < counts[i - 1]:
            j = int(np.argmax(counts[:i]))
            counts[j] -= 1
            counts[i] += 1
    return [int(c) for c in counts]


def pseudo_words(rng: np.random.Generator, n: int, syllables: int = 3) -> list[str]:
    """``n`` distinct pronounceable words that the built-in tagger reads as plain nouns."""
    lexicon, lemma = default_lexicon(), default_lemmatizer()
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < n:
        on = rng.integers(len(_ONSETS), size=syllables)
        vo = rng.integers(len(_VOWELS), size=syllables)
        w = "".join(_ONSETS[a] + _VOWELS[b] for a, b in zip(on, vo)) + _CODAS[rng.integers(len(_CODAS))]
        if w in seen or lexicon.tag(w) is not Pos.NOUN or lemma(w) != w:
            continue
        seen.add(w)
        words.append(w)
    return words


def generate_synthetic_baseline(
    seed: int,
    params: SyntheticParams | None = None,
    options: HierarchyOptions | None = None,
) -> tuple[Corpus, Hierarchy]:
    """Build a reproducible corpus and labeled hierarchy from ``seed``."""
    p = params or SyntheticParams()
    rng = np.random.default_rng(seed)
    counts = level_counts(p.n_classes, p.depth, p.level_ratio)

    class_ids: list[list[str]] = [[f"C{lvl + 1}_{i:05d}" for i in range(n)] for lvl, n in enumerate(counts)]
    parent = {c: None for c in class_ids[0]}
    for lvl in range(1, p.depth):
        above = class_ids[lvl - 1]
        for i, c in enumerate(class_ids[lvl]):
            parent[c] = above[i % len(above)]
    level = {c: lvl + 1 for lvl, ids in enumerate(class_ids) for c in ids}

    words = pseudo_words(rng, p.n_classes * 2 + p.vocab_size)
    label_words, vocab = words[: p.n_classes * 2], words[p.n_classes * 2 :]
    ordered = [c for ids in class_ids for c in ids]
    labels = {}
    for k, c in enumerate(ordered):
        # every third label is a two-word phrase
        labels[c] = f"{label_words[2 * k]} {label_words[2 * k + 1]}" if k % 3 == 2 else label_words[2 * k]

    leaves = class_ids[-1]
    n_pubs = len(leaves) * p.pubs_per_class
    pub_ids = [f"P{i:07d}" for i in range(n_pubs)]
    members_idx: dict[str, np.ndarray] = {}
    for li, c in enumerate(leaves):
        members_idx[c] = np.arange(li * p.pubs_per_class, (li + 1) * p.pubs_per_class)
    for lvl in range(p.depth - 2, -1, -1):
        for c in class_ids[lvl]:
            kids = [members_idx[k] for k in class_ids[lvl + 1] if parent[k] == c]
            members_idx[c] = np.sort(np.concatenate(kids)) if kids else np.zeros(0, dtype=int)

    fields = ("title", "keywords", "abstract", "journal", "addresses")
    segs = {f: [[] for _ in range(n_pubs)] for f in fields}
    filler = rng.integers(len(vocab), size=(n_pubs, p.fillers_per_pub + 3))
    for i in range(n_pubs):
        row = filler[i]
        segs["title"][i].extend(vocab[j] for j in row[: p.fillers_per_pub])
        segs["keywords"][i].append(vocab[row[-3]])
        segs["journal"][i].append(vocab[row[-2]])
        segs["addresses"][i].append(vocab[row[-1]])

    for c in ordered:
        members = members_idx[c]
        chosen = members[rng.random(len(members)) < p.plant_rate] if p.plant_rate < 1 else members
        mask = np.zeros(n_pubs, dtype=bool)
        mask[members] = True
        background = np.flatnonzero(~mask & (rng.random(n_pubs) < p.background_rate))
        for f in p.fields_for(level[c]):
            target = segs[f]
            for i in np.concatenate([chosen, background]):
                target[i].append(labels[c])

    records = []
    for i, pid in enumerate(pub_ids):
        title_segs = segs["title"][i]
        order = rng.permutation(len(title_segs))
        conn = rng.integers(len(_CONNECTORS), size=len(title_segs))
        parts = []
        for k, j in enumerate(order):
            if k:
                parts.append(_CONNECTORS[conn[k]])
            parts.append(title_segs[j])
        records.append(
            PublicationRecord(
                id=pid,
                title=" ".join(parts).capitalize(),
                abstract=". ".join(segs["abstract"][i]) or None,
                keywords=tuple(segs["keywords"][i]),
                journal="Journal of " + " and ".join(segs["journal"][i]),
                addresses=tuple(f"Department of {a}" for a in segs["addresses"][i]),
            )
        )

    class_rows = [{"class_id": c, "parent_id": parent[c], "labels": [labels[c]]} for c in ordered]
    assignments = [(pub_ids[i], c) for c in leaves for i in members_idx[c]]
    hierarchy = from_records(class_rows, assignments, options or HierarchyOptions())
    return Corpus(tuple(records)), hierarchy
