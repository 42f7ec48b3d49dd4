import csv
import json

import numpy as np
import pytest

from _oracles import jeffreys_interval, naive_tf
from hclabel.errors import HCLabelError
from hclabel.extraction import Extractor, normalize_term
from hclabel.hierarchy import HierarchyOptions, from_records
from hclabel.index import TermIndex, build_index
from hclabel.evaluation import (
    confidence_interval,
    evaluate,
    is_successful,
    max_possible_per_class,
    write_level_tsv,
    write_plot_csv,
    write_report_json,
)
from hclabel.synthetic import SyntheticParams, generate_synthetic_baseline
from hclabel.weighting import SWEEP_APPROACHES, WeightingSpec

TK = {"title", "keywords"}


def gold(*labels):
    return {normalize_term(x) for x in labels}


class TestIsSuccessful:
    def test_kyphosis_row(self):
        assert is_successful(["kyphoscoliosis", "kyphoplasty", "kyphosis"], gold("Kyphosis"))

    def test_either_label(self):
        assert is_successful(["nanomaterial", "nanotechnology", "graphene"], gold("Nanoscience", "Nanotechnology"))

    def test_spinal_curvatures_row(self):
        top = ["idiopathic scoliosis", "scoliosis", "adolescent idiopathic scoliosis"]
        assert gold("Spinal Curvatures") == {"spinal curvature"}
        assert not is_successful(top, gold("Spinal Curvatures"))

    def test_hyphenated_label(self):
        top = ["klippel trenaunay weber syndrome", "klippel trenaunay syndrome", "venous malformation"]
        assert is_successful(top, gold("Klippel-Trenaunay-Weber Syndrome"))


class TestMaxPossible:
    idx = TermIndex.from_counts({"c": {"three": 3, "two": 2}}, {"c": 60})

    def test_at_threshold(self):
        assert max_possible_per_class("c", self.idx, {"three"})

    def test_below_threshold(self):
        assert not max_possible_per_class("c", self.idx, {"two"})

    def test_never_extracted(self):
        assert not max_possible_per_class("c", self.idx, {"absent"})


class TestConfidenceInterval:
    @pytest.mark.parametrize("x,n", [(0, 10), (1, 10), (5, 10), (9, 10), (10, 10), (3, 47), (47, 47),
                                     (50, 100), (731, 1000), (1, 5209), (5000, 5209)])
    def test_matches_independent_quantiles(self, x, n):
        lo, hi = confidence_interval(x, n)
        want_lo, want_hi = jeffreys_interval(x, n)
        assert lo == pytest.approx(want_lo, abs=1e-10)
        assert hi == pytest.approx(want_hi, abs=1e-10)

    def test_other_level(self):
        assert confidence_interval(7, 20, 0.9) == pytest.approx(jeffreys_interval(7, 20, 0.9), abs=1e-10)

    def test_boundaries(self):
        lo, hi = confidence_interval(0, 12)
        assert lo == 0.0 and 0 < hi < 1
        lo, hi = confidence_interval(12, 12)
        assert hi == 1.0 and 0 < lo < 1

    def test_symmetry(self):
        lo, hi = confidence_interval(50, 100)
        assert (lo + hi) / 2 == pytest.approx(0.5, abs=1e-9)

    def test_width_shrinks(self):
        widths = [np.subtract(*confidence_interval(3 * n // 10, n)[::-1]) for n in (10, 100, 1000)]
        assert widths[0] > widths[1] > widths[2]

    def test_contains_rate(self):
        for n in (1, 7, 50):
            for x in range(n + 1):
                lo, hi = confidence_interval(x, n)
                assert 0 <= lo <= x / n <= hi <= 1

    def test_bad_input(self):
        with pytest.raises(ValueError):
            confidence_interval(3, 2)
        with pytest.raises(ValueError):
            confidence_interval(0, 0)


def ten_class_fixture():
    """Root R with ten level-2 classes; each class's outcome is decided by hand.

    Each class k has 50 members. "good" classes carry their label with a
    very concentrated count; "hidden" classes carry it often but behind a
    more specific term; "rare" classes carry it in fewer than 3 publications;
    "absent" classes never carry it.
    """
    plan = {
        # class: (gold label, {term: tf in class}, expected successful, expected extracted)
        "c01": ("alpha", {"alpha": 40}, True, True),
        "c02": ("bravo", {"bravo": 35, "common": 10}, True, True),
        "c03": ("charlie", {"charlie": 30}, True, True),
        "c04": ("delta", {"delta": 20, "common": 10}, True, True),
        "c05": ("echo", {"echo": 2, "echoid": 30}, False, False),
        "c06": ("foxtrot", {"foxtrotx": 30}, False, False),
        "c07": ("golf", {"golf": 3, "golfer": 25}, True, True),
        "c08": ("hotel", {"common": 10}, False, False),
        "c09": ("india", {"india": 4, "common": 45}, True, True),
        "c10": ("juliet", {"juliet": 3}, True, True),
    }
    counts = {c: dict(t) for c, (_, t, _, _) in plan.items()}
    root_counts = {}
    for terms in counts.values():
        for t, n in terms.items():
            root_counts[t] = root_counts.get(t, 0) + n
    counts["R"] = root_counts
    counts[""] = dict(root_counts)
    sizes = {c: 50 for c in plan} | {"R": 500, "": 500}
    members = [(f"{c}_{i}", c) for c in plan for i in range(50)]
    classes = [{"class_id": "R", "labels": ["root"]}] + [
        {"class_id": c, "parent_id": "R", "labels": [g]} for c, (g, *_) in plan.items()
    ]
    h = from_records(classes, members, HierarchyOptions(min_class_size=50))
    return h, TermIndex.from_counts(counts, sizes), plan


class TestHandCountedFixture:
    @pytest.mark.parametrize("n", [1, 3])
    def test_counts(self, n):
        h, idx, plan = ten_class_fixture()
        r = evaluate(h, idx, WeightingSpec.make("tfs"), TK, n)
        # hand count of the plan: 7 classes whose label is a candidate
        assert r.n_total == 10
        assert r.n_extracted == sum(1 for *_, ext in plan.values() if ext) == 7
        assert r.max_possible == 7 / 10
        assert r.excluded["root_level"] == 1

    def test_top1_hand_count(self):
        # tfs(0.5) = sqrt(ptf * s) with s = 10 tf / tf_parent here.  By hand:
        #   c07: golfer sqrt(0.5 * 10) beats golf sqrt(0.06 * 10)
        #   c09: common sqrt(0.9 * 6) beats india sqrt(0.08 * 10)
        # so only c01, c02, c03, c04 and c10 have their label on top.
        h, idx, _ = ten_class_fixture()
        r = evaluate(h, idx, WeightingSpec.make("tfs"), TK, 1)
        assert r.n_successful == 5
        assert r.match_rate == 0.5
        tops = {o.class_id: o.top_terms[0] for o in r.classes if o.top_terms}
        assert tops["c07"] == "golfer" and tops["c09"] == "common"

    def test_top3_hand_count(self):
        h, idx, plan = ten_class_fixture()
        r = evaluate(h, idx, WeightingSpec.make("tfs"), TK, 3)
        # every extracted label has at most two competing candidates, so N=3 finds all of them
        assert r.n_successful == sum(1 for *_, ok, _ in plan.values() if ok) == 7
        assert r.match_rate == 0.7


def _relabel(h, new_labels):
    rows = [{"class_id": c, "parent_id": n.parent_id, "labels": [new_labels.get(c, next(iter(n.raw_labels)))]}
            for c, n in h.nodes.items()]
    leaves = [c for c in h.nodes if c not in h.children]
    pairs = [(p, c) for c in leaves for p in h[c].members]
    return from_records(rows, pairs, h.options)


@pytest.fixture(scope="module")
def setup(planted_baseline):
    corpus, h = planted_baseline
    return corpus, h, build_index(corpus, h, TK)


class TestEvaluatePlanted:
    def test_tfs_match_rate(self, setup):
        _, h, idx = setup
        r = evaluate(h, idx, WeightingSpec.make("tfs"), TK, 3)
        assert r.match_rate >= 0.95
        assert r.match_rate == r.n_successful / r.n_total
        assert r.max_possible == r.n_extracted / r.n_total

    @pytest.mark.parametrize("approach", SWEEP_APPROACHES)
    def test_bounds_and_monotone(self, setup, approach):
        _, h, idx = setup
        spec = WeightingSpec.make(approach)
        rates = [evaluate(h, idx, spec, TK, n) for n in (1, 3, 10)]
        for r in rates:
            assert r.match_rate <= r.max_possible
            assert sum(s.n_total for s in r.per_level.values()) == r.n_total
            assert sum(s.n_successful for s in r.per_level.values()) == r.n_successful
            assert 0 <= r.ci_low <= r.match_rate <= r.ci_high <= 1
        assert rates[0].match_rate <= rates[1].match_rate <= rates[2].match_rate

    def test_root_exclusion_flag(self, setup):
        _, h, idx = setup
        excl = evaluate(h, idx, n=3)
        incl = evaluate(h, idx, n=3, exclude_root=False)
        assert 1 not in excl.per_level and 1 in incl.per_level
        assert incl.n_total == excl.n_total + excl.excluded["root_level"]

    def test_half_labels_absent(self):
        corpus, h = generate_synthetic_baseline(9, SyntheticParams(n_classes=51, pubs_per_class=60))
        targets = sorted(c for c in h.nodes if h[c].level > 1)
        assert len(targets) % 2 == 0
        h2 = _relabel(h, {c: f"unseen{chr(97 + i % 26)}{i}" for i, c in enumerate(targets[::2])})
        idx = build_index(corpus, h2, TK)
        r = evaluate(h2, idx, n=3)
        ex = Extractor()
        pub_terms = {p.id: ex.terms(p, TK) for p in corpus}
        direct = sum(
            1 for c in targets if any(naive_tf(h2[c].members, pub_terms).get(g, 0) >= 3 for g in h2[c].labels)
        )
        assert r.n_extracted == direct == len(targets) // 2
        assert r.max_possible == 0.5

    def test_zero_plant_rate(self):
        corpus, h = generate_synthetic_baseline(1, SyntheticParams(n_classes=12, pubs_per_class=60, plant_rate=0.0,
                                                                   background_rate=0.0))
        r = evaluate(h, build_index(corpus, h, TK), n=3)
        assert r.max_possible == 0.0 and r.match_rate == 0.0

    def test_full_plant_no_background(self):
        corpus, h = generate_synthetic_baseline(2, SyntheticParams(n_classes=20, pubs_per_class=60, plant_rate=1.0,
                                                                   background_rate=0.0))
        idx = build_index(corpus, h, TK)
        for approach in SWEEP_APPROACHES:
            r = evaluate(h, idx, WeightingSpec.make(approach), TK, 3)
            assert r.match_rate == r.max_possible == 1.0, approach

    def test_per_level_specs(self, setup):
        _, h, idx = setup
        by_level = {2: WeightingSpec.make("tfs", alpha=2 / 3), 3: WeightingSpec.make("tfs", alpha=1 / 3)}
        r = evaluate(h, idx, by_level, TK, 3)
        assert r.approach_name.startswith("by_level(")
        assert r.match_rate >= 0.95


class TestErrorsAndOutput:
    def test_no_targets(self):
        h = from_records([{"class_id": "A", "labels": ["a"]}], [], HierarchyOptions(min_class_size=5))
        with pytest.raises(HCLabelError, match="no classes"):
            evaluate(h, TermIndex.from_counts({}, {"": 0, "A": 0}))

    def test_unlabelable_counted(self):
        h, idx, _ = ten_class_fixture()
        r = evaluate(h, TermIndex.from_counts({"c01": {"alpha": 1}}, {c: idx.size(c) for c in idx.class_ids}))
        assert r.excluded["unlabelable_included"] == 10
        assert r.n_total == 10 and r.match_rate == 0.0

    def test_files(self, tmp_path):
        h, idx, _ = ten_class_fixture()
        reports = [evaluate(h, idx, WeightingSpec.make(a), TK, 3) for a in ("tfs", "jsd")]
        write_report_json(reports, tmp_path / "r.json")
        write_level_tsv(reports[0], tmp_path / "l.tsv")
        write_plot_csv(reports, tmp_path / "p.csv")
        data = json.loads((tmp_path / "r.json").read_text())
        assert [d["approach_name"] for d in data] == ["tfs_a0.5", "jsd"]
        assert data[0]["fields"] == ["title", "keywords"]
        rows = list(csv.reader((tmp_path / "l.tsv").open(), delimiter="\t"))
        assert rows[0] == ["level", "n_total", "n_successful", "rate", "ci_low", "ci_high"]
        assert rows[1][:3] == ["2", "10", "7"]
        plot = list(csv.DictReader((tmp_path / "p.csv").open()))
        assert len(plot) == 4 and plot[0]["level"] == "all"
