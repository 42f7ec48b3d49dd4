"""Top-N labels for the classes of a hierarchy."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .hierarchy import Hierarchy
from .index import TermIndex
from .weighting import ClassScores, WeightingSpec, score_class

DEFAULT_TOP_N = 3


@dataclass(frozen=True)
class LabelResult:
    class_id: str
    level: int
    ranked_terms: tuple[tuple[str, float], ...]
    spec_used: WeightingSpec
    flags: frozenset[str] = field(default_factory=frozenset)

    @property
    def terms(self) -> list[str]:
        return [t for t, _ in self.ranked_terms]

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "level": self.level,
            "ranked_terms": [{"term": t, "score": _json_score(s)} for t, s in self.ranked_terms],
            "spec": self.spec_used.to_dict(),
            "flags": sorted(self.flags),
        }


def _json_score(s: float):
    # JSON has no infinity literal
    return s if math.isfinite(s) else ("inf" if s > 0 else "-inf")


def _top(scored: ClassScores, n: int, stoplist) -> tuple[tuple[str, float], ...]:
    out = []
    for term, s in scored.ranked():
        if term in stoplist:
            continue
        out.append((term, s))
        if len(out) == n:
            break
    return tuple(out)


def label_class(
    c: str,
    idx: TermIndex,
    h: Hierarchy,
    spec: WeightingSpec | None = None,
    n: int = DEFAULT_TOP_N,
    stoplist: Iterable[str] = frozenset(),
) -> LabelResult:
    """Best ``n`` candidate terms of class ``c``; stop-listed terms are removed before truncation."""
    if n < 1:
        raise ValueError("N must be at least 1")
    spec = spec or WeightingSpec.make("tfs")
    scored = score_class(c, idx, h, spec)
    return LabelResult(c, h.nodes[c].level, _top(scored, n, frozenset(stoplist)), spec, scored.flags)


def spec_for_level(level: int, spec_by_level: Mapping[int, WeightingSpec] | None, default: WeightingSpec | None = None):
    if spec_by_level and level in spec_by_level:
        return spec_by_level[level]
    return default or WeightingSpec.make("tfs")


def label_hierarchy(
    h: Hierarchy,
    idx: TermIndex,
    spec_by_level: Mapping[int, WeightingSpec] | None = None,
    n: int = DEFAULT_TOP_N,
    stoplist: Iterable[str] = frozenset(),
    default: WeightingSpec | None = None,
    classes: Iterable[str] | None = None,
) -> dict[str, LabelResult]:
    """Label every target class (or the given ``classes``), keyed by class id in sorted order."""
    stop = frozenset(stoplist)
    targets = sorted(classes) if classes is not None else h.target_classes()
    return {
        c: label_class(c, idx, h, spec_for_level(h.nodes[c].level, spec_by_level, default), n, stop)
        for c in targets
    }


def format_score(x: float) -> str:
    return repr(float(x))


def write_labels_tsv(results: Mapping[str, LabelResult], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["class_id", "level", "rank", "term", "score"])
        for cid in sorted(results):
            r = results[cid]
            for rank, (term, s) in enumerate(r.ranked_terms, 1):
                w.writerow([cid, r.level, rank, term, format_score(s)])


def write_labels_json(results: Mapping[str, LabelResult], path) -> None:
    data = [results[c].to_dict() for c in sorted(results)]
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
