"""Match@N evaluation of labels against gold class labels."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from scipy import stats

from .corpus import FieldSet
from .errors import HCLabelError
from .hierarchy import Hierarchy
from .index import TermIndex
from .labeling import DEFAULT_TOP_N, LabelResult, label_class, spec_for_level
from .weighting import UNLABELABLE, WeightingSpec


def is_successful(result: LabelResult | Iterable[str], gold_labels: Iterable[str]) -> bool:
    """True when any of the top-ranked terms equals a gold label."""
    terms = result.terms if isinstance(result, LabelResult) else list(result)
    return not set(terms).isdisjoint(gold_labels)


def max_possible_per_class(c: str, idx: TermIndex, gold_labels: Iterable[str]) -> bool:
    """True when some gold label was extracted from at least ``support_threshold`` publications of ``c``."""
    return any(idx.tf(c, g) >= idx.support_threshold for g in gold_labels)


def confidence_interval(successes: int, total: int, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed Jeffreys interval (Beta(1/2, 1/2) prior) for a binomial proportion.

    The lower bound is 0 when there are no successes and the upper bound is
    1 when every trial succeeded.
    """
    if total < 1 or not 0 <= successes <= total:
        raise ValueError("need 0 <= successes <= total and total >= 1")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    tail = (1 - level) / 2
    posterior = stats.beta(successes + 0.5, total - successes + 0.5)
    low = 0.0 if successes == 0 else float(posterior.ppf(tail))
    high = 1.0 if successes == total else float(posterior.isf(tail))
    return max(0.0, low), min(1.0, high)


@dataclass(frozen=True)
class LevelStats:
    n_total: int
    n_successful: int
    n_extracted: int
    rate: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, n_total: int, n_successful: int, n_extracted: int, level: float = 0.95):
        low, high = confidence_interval(n_successful, n_total, level)
        return cls(n_total, n_successful, n_extracted, n_successful / n_total, low, high)


@dataclass(frozen=True)
class ClassOutcome:
    class_id: str
    level: int
    successful: bool
    extracted: bool
    top_terms: tuple[str, ...]
    unlabelable: bool


@dataclass(frozen=True)
class EvaluationReport:
    approach: WeightingSpec | Mapping[int, WeightingSpec]
    fields_used: FieldSet | None
    n: int
    n_total: int
    n_successful: int
    n_extracted: int
    match_rate: float
    max_possible: float
    ci_low: float
    ci_high: float
    per_level: dict[int, LevelStats]
    excluded: dict[str, int] = field(default_factory=dict)
    classes: tuple[ClassOutcome, ...] = ()

    @property
    def approach_name(self) -> str:
        if isinstance(self.approach, WeightingSpec):
            return self.approach.name
        return "by_level(" + ",".join(f"{k}:{v.name}" for k, v in sorted(self.approach.items())) + ")"

    def to_dict(self) -> dict:
        if isinstance(self.approach, WeightingSpec):
            approach = self.approach.to_dict()
        else:
            approach = {str(k): v.to_dict() for k, v in sorted(self.approach.items())}
        return {
            "approach": approach,
            "approach_name": self.approach_name,
            "fields": list(self.fields_used.ordered()) if self.fields_used else None,
            "n": self.n,
            "n_total": self.n_total,
            "n_successful": self.n_successful,
            "n_extracted": self.n_extracted,
            "match_rate": self.match_rate,
            "max_possible": self.max_possible,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "per_level": {str(k): vars(v) for k, v in sorted(self.per_level.items())},
            "excluded": dict(sorted(self.excluded.items())),
            "classes": [
                {
                    "class_id": o.class_id,
                    "level": o.level,
                    "successful": o.successful,
                    "extracted": o.extracted,
                    "unlabelable": o.unlabelable,
                    "top_terms": list(o.top_terms),
                }
                for o in self.classes
            ],
        }


def evaluation_targets(h: Hierarchy, exclude_root: bool = True) -> tuple[list[str], dict[str, int]]:
    """Classes that take part in evaluation, and counts of those left out by reason."""
    excluded = {"below_min_size": 0, "multi_noun_phrase_label": 0, "root_level": 0, "no_gold_label": 0}
    targets = []
    for c in sorted(h.nodes):
        node = h.nodes[c]
        if len(node.members) < h.options.min_class_size:
            excluded["below_min_size"] += 1
        elif h.options.require_single_np_labels and node.multi_np_label:
            excluded["multi_noun_phrase_label"] += 1
        elif exclude_root and node.level == 1:
            excluded["root_level"] += 1
        elif not node.labels:
            excluded["no_gold_label"] += 1
        else:
            targets.append(c)
    return targets, excluded


def evaluate(
    h: Hierarchy,
    idx: TermIndex,
    spec: WeightingSpec | Mapping[int, WeightingSpec] | None = None,
    fields: FieldSet | Iterable[str] | None = None,
    n: int = DEFAULT_TOP_N,
    exclude_root: bool = True,
    stoplist: Iterable[str] = frozenset(),
    ci_level: float = 0.95,
) -> EvaluationReport:
    """Match@N and maximal possible Match@N over the evaluable classes of ``h``.

    ``spec`` may be a single weighting spec or a mapping from level to spec.
    """
    if fields is not None and not isinstance(fields, FieldSet):
        fields = FieldSet(fields)
    if fields is None and idx.meta.get("fields"):
        fields = FieldSet(idx.meta["fields"])
    spec = spec if spec is not None else WeightingSpec.make("tfs")
    by_level = None if isinstance(spec, WeightingSpec) else spec
    default = spec if isinstance(spec, WeightingSpec) else None

    targets, excluded = evaluation_targets(h, exclude_root)
    if not targets:
        raise HCLabelError("no classes to evaluate")
    stop = frozenset(stoplist)
    outcomes = []
    for c in targets:
        node = h.nodes[c]
        result = label_class(c, idx, h, spec_for_level(node.level, by_level, default), n, stop)
        outcomes.append(
            ClassOutcome(
                c,
                node.level,
                is_successful(result, node.labels),
                max_possible_per_class(c, idx, node.labels),
                tuple(result.terms),
                UNLABELABLE in result.flags,
            )
        )

    per_level = {}
    for level in sorted({o.level for o in outcomes}):
        group = [o for o in outcomes if o.level == level]
        per_level[level] = LevelStats.from_counts(
            len(group), sum(o.successful for o in group), sum(o.extracted for o in group), ci_level
        )
    n_total = len(outcomes)
    n_successful = sum(o.successful for o in outcomes)
    n_extracted = sum(o.extracted for o in outcomes)
    low, high = confidence_interval(n_successful, n_total, ci_level)
    excluded["unlabelable_included"] = sum(o.unlabelable for o in outcomes)
    return EvaluationReport(
        approach=spec,
        fields_used=fields,
        n=n,
        n_total=n_total,
        n_successful=n_successful,
        n_extracted=n_extracted,
        match_rate=n_successful / n_total,
        max_possible=n_extracted / n_total,
        ci_low=low,
        ci_high=high,
        per_level=per_level,
        excluded=excluded,
        classes=tuple(outcomes),
    )


def write_report_json(reports: Iterable[EvaluationReport], path) -> None:
    data = [r.to_dict() for r in reports]
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def write_level_tsv(report: EvaluationReport, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["level", "n_total", "n_successful", "rate", "ci_low", "ci_high"])
        for level, s in sorted(report.per_level.items()):
            w.writerow([level, s.n_total, s.n_successful, repr(s.rate), repr(s.ci_low), repr(s.ci_high)])


PLOT_COLUMNS = ["approach", "fields", "n", "level", "n_total", "n_successful", "rate", "max_possible", "ci_low", "ci_high"]


def write_plot_csv(reports: Iterable[EvaluationReport], path) -> None:
    """One row per (report, level) plus an ``all`` row per report."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for r in reports:
            fields = str(r.fields_used) if r.fields_used else ""
            w.writerow([r.approach_name, fields, r.n, "all", r.n_total, r.n_successful,
                        repr(r.match_rate), repr(r.max_possible), repr(r.ci_low), repr(r.ci_high)])
            for level, s in sorted(r.per_level.items()):
                w.writerow([r.approach_name, fields, r.n, level, s.n_total, s.n_successful,
                            repr(s.rate), repr(s.n_extracted / s.n_total), repr(s.ci_low), repr(s.ci_high)])
