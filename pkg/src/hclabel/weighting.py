"""Term weighting approaches for class labeling.

Each approach scores a term ``t`` for a class ``c`` against its parent
class ``p``.  The per-(term, class) inputs are gathered in
:class:`ClassTermStats`; every scoring function accepts scalars or numpy
arrays (broadcast element-wise) and returns a float or an array.

Logarithms are natural.  ``0 * log(0 / x)`` is taken as 0.  A positive
observed count against an expected count of zero scores ``+inf``, which
ranks above every finite score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ScoreError
from .hierarchy import Hierarchy
from .index import ClassRow, TermIndex

CHI_SQUARE = "chi_square"
JSD = "jsd"
JSD_RAW = "jsd_raw"
JSDQ = "jsdq"
TF_IDF = "tf_idf"
WVE = "wve"
TFS = "tfs"
APPROACHES = (CHI_SQUARE, JSD, JSD_RAW, JSDQ, TF_IDF, WVE, TFS)
#: the six approaches compared in sweeps (raw JSD only illustrates a pathology)
SWEEP_APPROACHES = (CHI_SQUARE, JSD, JSDQ, TF_IDF, WVE, TFS)

DEFAULT_M = 25.0
DEFAULT_ALPHA = 0.5
SIGNIFICANT_DIGITS = 12


@dataclass(frozen=True)
class WeightingSpec:
    approach: str = TFS
    m: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ValueError(f"unknown approach {self.approach!r}; choose from {', '.join(APPROACHES)}")
        if (self.m is not None) != (self.approach == WVE):
            raise ValueError("parameter m is used by (and required for) wve only")
        if (self.alpha is not None) != (self.approach == TFS):
            raise ValueError("parameter alpha is used by (and required for) tfs only")
        if self.m is not None and not (self.m >= 0 and math.isfinite(self.m)):
            raise ValueError("m must be a finite non-negative number")
        if self.alpha is not None and not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")

    @classmethod
    def make(cls, approach: str, m: float | None = None, alpha: float | None = None) -> "WeightingSpec":
        """Spec with defaults filled in for the approach's own parameter; others ignored."""
        if approach == WVE:
            return cls(approach, m=DEFAULT_M if m is None else float(m))
        if approach == TFS:
            return cls(approach, alpha=DEFAULT_ALPHA if alpha is None else float(alpha))
        return cls(approach)

    @classmethod
    def parse(cls, text: str) -> "WeightingSpec":
        """Parse ``approach`` or ``approach:param``, e.g. ``tfs:0.5``, ``wve:25``, ``tfs:1/3``."""
        name, _, param = text.strip().partition(":")
        value = None
        if param:
            num, _, den = param.partition("/")
            value = float(num) / float(den) if den else float(num)
            if name not in (WVE, TFS):
                raise ValueError(f"approach {name!r} takes no parameter")
        return cls.make(name, m=value if name == WVE else None, alpha=value if name == TFS else None)

    @property
    def name(self) -> str:
        if self.approach == WVE:
            return f"wve_m{_fmt(self.m)}"
        if self.approach == TFS:
            return f"tfs_a{_fmt(self.alpha)}"
        return self.approach

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"approach": self.approach}
        if self.m is not None:
            out["m"] = self.m
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out


def _fmt(x: float) -> str:
    return f"{x:.6g}"


@dataclass(frozen=True)
class ClassTermStats:
    """Counts describing one term (or an array of terms) in one class.

    tf_cj / tf_cp: publications with the term in the class / its parent;
    size_cj / size_cp: class / parent sizes; tf_cref: publications with the
    term in the reference collection (parent minus class); totals_cj /
    totals_cref: sums of tf over all terms of the class / reference collection.
    """

    tf_cj: Any
    tf_cp: Any
    size_cj: Any
    size_cp: Any
    tf_cref: Any = 0
    totals_cj: Any = 1
    totals_cref: Any = 1


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _out(x, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(x)
    return x


def _inputs(s: ClassTermStats):
    return (s.tf_cj, s.tf_cp, s.size_cj, s.size_cp, s.tf_cref, s.totals_cj, s.totals_cref)


def expected_frequency(s: ClassTermStats):
    """Parent frequency scaled by the class's share of the parent."""
    size_cp = _arr(s.size_cp)
    if np.any(size_cp <= 0):
        raise ScoreError("expected frequency undefined: parent class is empty")
    return _out(_arr(s.tf_cp) * _arr(s.size_cj) / size_cp, *_inputs(s))


def chi_square(s: ClassTermStats):
    tf = _arr(s.tf_cj)
    e = _arr(expected_frequency(s))
    diff = tf - e
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(e > 0, diff * diff / e, np.inf)
    return _out(np.where(diff > 0, val, 0.0), *_inputs(s))


def _plogp_over(p, m):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(p / m), 0.0)


def _pqm(s: ClassTermStats):
    tcj, tref = _arr(s.totals_cj), _arr(s.totals_cref)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(tcj > 0, _arr(s.tf_cj) / tcj, 0.0)
        p = np.where(tref > 0, _arr(s.tf_cref) / tref, 0.0)
    return p, q, (p + q) / 2, tref > 0


def jsd(s: ClassTermStats, raw: bool = False):
    """Jensen-Shannon term; zero unless the term is relatively more frequent in the class.

    ``raw=True`` drops that condition and returns the symmetric divergence term.
    Terms are scored 0 when the reference collection is empty.
    """
    p, q, m, has_ref = _pqm(s)
    val = _plogp_over(p, m) + _plogp_over(q, m)
    if not raw:
        val = np.where(q > p, val, 0.0)
    return _out(np.where(has_ref, val, 0.0), *_inputs(s))


def jsd_raw(s: ClassTermStats):
    return jsd(s, raw=True)


def jsdq(s: ClassTermStats):
    """Class-side half of the divergence term; negative when the term is rarer in the class."""
    p, q, m, has_ref = _pqm(s)
    return _out(np.where(has_ref, _plogp_over(q, m), 0.0), *_inputs(s))


def tf_idf(s: ClassTermStats):
    tf, tfp = _arr(s.tf_cj), _arr(s.tf_cp)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(tfp > 0, tf * np.log(_arr(s.size_cp) / tfp), np.inf)
    return _out(np.where(tf > 0, val, 0.0), *_inputs(s))


def wve(s: ClassTermStats, m: float = DEFAULT_M):
    if m < 0:
        raise ValueError("m must be non-negative")
    tf = _arr(s.tf_cj)
    denom = _arr(s.tf_cp) + m
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(denom > 0, tf / denom, 0.0)
    return _out(val, *_inputs(s))


def relative_frequency(s: ClassTermStats):
    tf, n = _arr(s.tf_cj), _arr(s.size_cj)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _out(np.where(tf > 0, tf / n, 0.0), *_inputs(s))


def specificity(s: ClassTermStats):
    """Observed over expected frequency, computed as one ratio of integer products."""
    tf = _arr(s.tf_cj)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (tf * _arr(s.size_cp)) / (_arr(s.tf_cp) * _arr(s.size_cj))
    return _out(np.where(tf > 0, val, 0.0), *_inputs(s))


def tfs(s: ClassTermStats, alpha: float = DEFAULT_ALPHA):
    """Weighted geometric mean of relative frequency (weight alpha) and specificity."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    ptf = _arr(relative_frequency(s))
    if alpha == 1:
        return _out(ptf, *_inputs(s))
    spec = _arr(specificity(s))
    if alpha == 0:
        return _out(spec, *_inputs(s))
    with np.errstate(over="ignore"):
        val = np.where(ptf > 0, ptf**alpha * spec ** (1 - alpha), 0.0)
    return _out(val, *_inputs(s))


def score(s: ClassTermStats, spec: WeightingSpec):
    if spec.approach == CHI_SQUARE:
        return chi_square(s)
    if spec.approach == JSD:
        return jsd(s)
    if spec.approach == JSD_RAW:
        return jsd(s, raw=True)
    if spec.approach == JSDQ:
        return jsdq(s)
    if spec.approach == TF_IDF:
        return tf_idf(s)
    if spec.approach == WVE:
        return wve(s, spec.m)
    return tfs(s, spec.alpha)


# ----------------------------------------------------------------- ranking

UNLABELABLE = "unlabelable"
DEGENERATE_REFERENCE = "degenerate_reference"
NO_PARENT = "no_parent"


def round_sig(values, digits: int = SIGNIFICANT_DIGITS) -> np.ndarray:
    """Round to ``digits`` significant digits (part of the ranking contract)."""
    fmt = f"{{:.{digits}g}}".format
    return np.array([float(fmt(v)) for v in np.asarray(values, dtype=np.float64).ravel()], dtype=np.float64)


def rank_order(scores, tf, term_keys) -> np.ndarray:
    """Permutation sorting by score desc, then tf desc, then term key asc.

    Scores are rounded to 12 significant digits first so that last-ulp
    differences between platforms cannot reorder terms.
    """
    rounded = round_sig(scores)
    return np.lexsort((np.asarray(term_keys), -np.asarray(tf, dtype=np.float64), -rounded))


@dataclass(frozen=True)
class ClassScores:
    class_id: str
    terms: tuple[str, ...]
    scores: tuple[float, ...]
    tf: tuple[int, ...]
    flags: frozenset[str]

    def ranked(self) -> list[tuple[str, float]]:
        return list(zip(self.terms, self.scores))


def class_stats(c: str, idx: TermIndex, h: Hierarchy, candidates_only: bool = True):
    """Gather per-term statistics of class ``c``.

    Returns ``(term_indices, ClassTermStats, flags)``; the stats hold arrays
    aligned with ``term_indices``.
    """
    flags = set()
    row = idx.candidate_mask(c) if candidates_only else idx.row(c)
    pkey = h.parent_key(c)
    if pkey is None or pkey not in idx:
        flags.add(NO_PARENT)
        return row.terms, None, flags
    prow = idx.row(pkey)
    tf_cp = prow.lookup(row.terms)
    inner: ClassRow = idx.overlap_row(c)
    tf_inner = inner.lookup(row.terms)
    totals_inner = int(inner.counts.sum())
    size_cp = idx.size(pkey)
    totals_cref = idx.totals(pkey) - totals_inner
    stats = ClassTermStats(
        tf_cj=row.counts,
        tf_cp=tf_cp,
        size_cj=idx.size(c),
        size_cp=size_cp,
        tf_cref=tf_cp - tf_inner,
        totals_cj=idx.totals(c),
        totals_cref=totals_cref,
    )
    if totals_cref <= 0:
        flags.add(DEGENERATE_REFERENCE)
    if size_cp <= 0:
        flags.add(NO_PARENT)
    return row.terms, stats, flags


def score_class(c: str, idx: TermIndex, h: Hierarchy, spec: WeightingSpec) -> ClassScores:
    """Score every candidate term of ``c`` and sort by the ranking contract."""
    term_idx, stats, flags = class_stats(c, idx, h)
    if len(term_idx) == 0:
        flags.add(UNLABELABLE)
    if len(term_idx) == 0 or stats is None or NO_PARENT in flags:
        return ClassScores(c, (), (), (), frozenset(flags))
    raw = np.broadcast_to(_arr(score(stats, spec)), term_idx.shape)
    order = rank_order(raw, stats.tf_cj, term_idx)
    rounded = round_sig(raw[order])
    return ClassScores(
        c,
        tuple(idx.terms[j] for j in term_idx[order]),
        tuple(float(v) for v in rounded),
        tuple(int(v) for v in np.asarray(stats.tf_cj)[order]),
        frozenset(flags),
    )


def score_terms(c: str, idx: TermIndex, h: Hierarchy, spec: WeightingSpec) -> list[tuple[str, float]]:
    """Candidate terms of ``c`` with their scores, best first."""
    return score_class(c, idx, h, spec).ranked()

