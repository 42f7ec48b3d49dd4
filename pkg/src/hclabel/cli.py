"""Command-line entry point: ``hclabel {synth,index,label,evaluate}``.

Settings come from command-line flags, then from an optional ``--config``
file, then from built-in defaults.  The config file holds ``key = value``
lines (``#`` comments allowed) whose keys are the long flag names with
dashes, underscores or dots (``wve.m``, ``tfs.alpha``), e.g.::

    corpus = data/corpus.jsonl
    classes = data/classes.jsonl
    assignments = data/assignments.csv
    fields = title+keywords
    approach = tfs
    tfs-alpha = 0.5
    spec-by-level = 2=tfs:2/3, 3=tfs:1/3

Exit status: 0 on success, 1 on runtime failure, 2 on usage or
configuration errors.  Results go to stdout as tab-separated lines;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .corpus import Corpus, FieldSet, ingest_corpus, write_corpus
from .errors import HCLabelError, InputError
from .evaluation import evaluate, write_level_tsv, write_plot_csv, write_report_json
from .extraction import BUILTIN, PRETAGGED, Extractor, PosLexicon, load_term_list
from .hierarchy import Hierarchy, HierarchyOptions, build_hierarchy, write_hierarchy
from .index import TermIndex, build_index, build_indexes, candidate_terms, default_threads
from .labeling import label_hierarchy, write_labels_json, write_labels_tsv
from .synthetic import SyntheticParams, generate_synthetic_baseline
from .weighting import SWEEP_APPROACHES, WeightingSpec

log = logging.getLogger("hclabel")


class UsageError(HCLabelError):
    pass


# Every setting: name -> (type converter, default).  Flag names are the keys with "_" -> "-".
def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int_list(v):
    return [int(x) for x in str(v).replace(" ", "").split(",") if x]


SETTINGS = {
    "corpus": (str, None),
    "format": (str, None),
    "classes": (str, None),
    "assignments": (str, None),
    "index": (str, None),
    "fields": (str, "title+keywords"),
    "mode": (str, BUILTIN),
    "lexicon": (str, None),
    "address_stopwords": (str, None),
    "stoplist": (str, None),
    "threshold": (int, 3),
    "min_class_size": (int, 50),
    "rollup": (_bool, True),
    "virtual_root": (_bool, True),
    "require_disjoint_levels": (_bool, False),
    "split_amp": (_bool, False),
    "single_np_labels": (_bool, False),
    "exclude_root": (_bool, True),
    "approach": (str, "tfs"),
    "wve_m": (float, 25.0),
    "tfs_alpha": (float, 0.5),
    "spec_by_level": (str, None),
    "top_n": (_int_list, [3]),
    "threads": (int, None),
    "seed": (int, 42),
    "out": (str, None),
    "sweep": (_bool, False),
    "approaches": (str, None),
    "sweep_fields": (str, None),
    "n_classes": (int, 50),
    "depth": (int, 3),
    "pubs_per_class": (int, 100),
    "vocab_size": (int, 500),
    "plant_rate": (float, 0.8),
    "background_rate": (float, 0.01),
}


def read_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + path.read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}".replace("\n", " ")) from exc
    out = {}
    for key, value in parser["run"].items():
        name = key.replace("-", "_").replace(".", "_")
        if name not in SETTINGS:
            raise InputError(f"{path}: unknown setting {key!r}")
        out[name] = value
    return out


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        raw = read_config(args.config) if getattr(args, "config", None) else {}
        for name in SETTINGS:
            v = getattr(args, name, None)
            if v is not None:
                raw[name] = v
        values = {}
        for name, (conv, default) in SETTINGS.items():
            if name in raw:
                try:
                    values[name] = conv(raw[name]) if not isinstance(raw[name], list) else raw[name]
                except ValueError as exc:
                    raise InputError(f"bad value for {name}: {exc}") from exc
            else:
                values[name] = default
        if values["threads"] is None:
            values["threads"] = default_threads()
        if values["threads"] < 1:
            raise InputError("threads must be >= 1")
        if values["mode"] not in (BUILTIN, PRETAGGED):
            raise InputError(f"mode must be {BUILTIN} or {PRETAGGED}")
        return cls(values)

    def require(self, *names):
        for name in names:
            if not self.values.get(name):
                raise InputError(f"missing required setting: {name.replace('_', '-')}")

    # derived objects ---------------------------------------------------

    def field_set(self) -> FieldSet:
        return _field_set(self.fields)

    def hierarchy_options(self) -> HierarchyOptions:
        return HierarchyOptions(
            min_class_size=self.min_class_size,
            rollup=self.rollup,
            require_disjoint_levels=self.require_disjoint_levels,
            virtual_root=self.virtual_root,
            split_amp=self.split_amp,
            require_single_np_labels=self.single_np_labels,
        )

    def extractor(self) -> Extractor:
        lexicon = PosLexicon.from_file(_existing(self.lexicon, "lexicon")) if self.lexicon else None
        stop = load_term_list(_existing(self.address_stopwords, "address stopwords")) if self.address_stopwords else None
        return Extractor(self.mode, lexicon=lexicon, address_stopwords=stop)

    def label_stoplist(self) -> frozenset[str]:
        return load_term_list(_existing(self.stoplist, "stoplist")) if self.stoplist else frozenset()

    def spec(self) -> WeightingSpec:
        return _spec(self.approach, self.wve_m, self.tfs_alpha)

    def specs_by_level(self) -> dict[int, WeightingSpec] | None:
        if not self.spec_by_level:
            return None
        out = {}
        for item in self.spec_by_level.split(","):
            if not item.strip():
                continue
            level, sep, text = item.partition("=")
            if not sep:
                raise InputError(f"spec-by-level entries look like LEVEL=approach[:param], got {item!r}")
            try:
                out[int(level)] = WeightingSpec.parse(text)
            except ValueError as exc:
                raise InputError(f"spec-by-level: {exc}") from exc
        return out

    def sweep_specs(self) -> list[WeightingSpec]:
        if self.approaches:
            try:
                return [WeightingSpec.parse(a) for a in self.approaches.split(",") if a.strip()]
            except ValueError as exc:
                raise InputError(f"approaches: {exc}") from exc
        if self.sweep:
            return [_spec(a, self.wve_m, self.tfs_alpha) for a in SWEEP_APPROACHES]
        return [self.spec()]

    def sweep_field_sets(self) -> list[FieldSet]:
        if not self.sweep_fields:
            return [self.field_set()]
        return [_field_set(f) for f in self.sweep_fields.split(",") if f.strip()]


def _spec(approach, m, alpha) -> WeightingSpec:
    try:
        return WeightingSpec.make(approach, m=m, alpha=alpha)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _field_set(text) -> FieldSet:
    try:
        return FieldSet(text.replace(",", "+"))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _existing(path, what) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {p}")
    return p


# ------------------------------------------------------------------ pipeline

def load_inputs(cfg: RunConfig) -> tuple[Corpus, Hierarchy]:
    cfg.require("corpus", "classes", "assignments")
    corpus = ingest_corpus(cfg.corpus, cfg.format)
    if corpus.rejected:
        for r in corpus.rejected:
            log.warning("corpus line %d rejected: %s", r.line, r.reason)
    h = build_hierarchy(cfg.classes, cfg.assignments, cfg.hierarchy_options(), publications=corpus.ids)
    for err in h.errors:
        log.warning("%s", err)
    return corpus, h


def obtain_index(cfg: RunConfig, corpus: Corpus, h: Hierarchy) -> TermIndex:
    if cfg.index and Path(cfg.index).is_file():
        idx = TermIndex.load(cfg.index)
        if idx.meta.get("fields") != list(cfg.field_set().ordered()):
            raise InputError(f"index {cfg.index} was built for fields {idx.meta.get('fields')}, not {cfg.field_set()}")
        return idx
    return build_index(corpus, h, cfg.field_set(), cfg.extractor(), cfg.threshold, cfg.threads)


def _emit(*cols):
    print("\t".join(str(c) for c in cols))


def cmd_synth(cfg: RunConfig) -> int:
    cfg.require("out")
    params = SyntheticParams(
        n_classes=cfg.n_classes,
        depth=cfg.depth,
        pubs_per_class=cfg.pubs_per_class,
        vocab_size=cfg.vocab_size,
        plant_rate=cfg.plant_rate,
        background_rate=cfg.background_rate,
    )
    corpus, h = generate_synthetic_baseline(cfg.seed, params, cfg.hierarchy_options())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out / "corpus.jsonl")
    write_hierarchy(h, out / "classes.jsonl", out / "assignments.csv")
    _emit("publications", len(corpus))
    _emit("classes", len(h))
    _emit("out", out)
    return 0


def cmd_index(cfg: RunConfig) -> int:
    cfg.require("out")
    corpus, h = load_inputs(cfg)
    idx = build_index(corpus, h, cfg.field_set(), cfg.extractor(), cfg.threshold, cfg.threads)
    idx.save(cfg.out)
    n_candidates = sum(len(candidate_terms(c, idx)) for c in h.nodes)
    _emit("publications", idx.meta["n_publications"])
    _emit("classes", len(h))
    _emit("terms", len(idx.terms))
    _emit("candidate_terms", n_candidates)
    _emit("index", cfg.out)
    return 0


def cmd_label(cfg: RunConfig) -> int:
    cfg.require("out")
    corpus, h = load_inputs(cfg)
    idx = obtain_index(cfg, corpus, h)
    n = cfg.top_n[0] if cfg.top_n else 3
    results = label_hierarchy(h, idx, cfg.specs_by_level(), n, cfg.label_stoplist(), default=cfg.spec())
    tsv, js = _label_paths(cfg.out)
    write_labels_tsv(results, tsv)
    write_labels_json(results, js)
    flagged = sum(1 for r in results.values() if r.flags)
    _emit("labeled_classes", len(results))
    _emit("flagged_classes", flagged)
    _emit("labels_tsv", tsv)
    _emit("labels_json", js)
    return 0


def _label_paths(out) -> tuple[Path, Path]:
    out = Path(out)
    if out.suffix in (".tsv", ".json"):
        return out.with_suffix(".tsv"), out.with_suffix(".json")
    return out.with_name(out.name + ".tsv"), out.with_name(out.name + ".json")


def cmd_evaluate(cfg: RunConfig) -> int:
    cfg.require("out")
    corpus, h = load_inputs(cfg)
    field_sets = cfg.sweep_field_sets()
    if len(field_sets) == 1 and cfg.index and Path(cfg.index).is_file():
        indexes = {field_sets[0]: obtain_index(cfg, corpus, h)}
    else:
        indexes = build_indexes(corpus, h, field_sets, cfg.extractor(), cfg.threshold, cfg.threads)
    by_level = cfg.specs_by_level()
    specs = [by_level] if by_level else cfg.sweep_specs()
    stop = cfg.label_stoplist()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for fs in field_sets:
        for spec in specs:
            for n in cfg.top_n:
                r = evaluate(h, indexes[fs], spec if not by_level else by_level, fs, n, cfg.exclude_root, stop)
                reports.append(r)
                write_level_tsv(r, out / f"levels_{r.approach_name}_{fs}_N{n}.tsv")
                _emit(r.approach_name, fs, n, repr(r.match_rate), repr(r.max_possible), r.n_total)
    write_report_json(reports, out / "report.json")
    write_plot_csv(reports, out / "plot.csv")
    return 0


COMMANDS = {"synth": cmd_synth, "index": cmd_index, "label": cmd_label, "evaluate": cmd_evaluate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--corpus", help="publication records (JSONL or CSV)")
    g.add_argument("--format", choices=["jsonl", "csv"], help="corpus format (default: by suffix)")
    g.add_argument("--classes", help="class file (JSONL)")
    g.add_argument("--assignments", help="publication_id,class_id assignment file (CSV)")
    g.add_argument("--index", help="term index file to reuse")
    g = common.add_argument_group("extraction")
    g.add_argument("--fields", help="fields joined by + (default title+keywords)")
    g.add_argument("--mode", choices=[BUILTIN, PRETAGGED])
    g.add_argument("--lexicon", help="part-of-speech lexicon (token<TAB>N|J|O)")
    g.add_argument("--address-stopwords", help="address stop-word file, one term per line")
    g.add_argument("--threshold", type=int, help="minimum publications for a candidate term (default 3)")
    g = common.add_argument_group("hierarchy")
    g.add_argument("--min-class-size", type=int, help="smallest labeled class (default 50)")
    g.add_argument("--no-rollup", dest="rollup", action="store_false", default=None)
    g.add_argument("--no-virtual-root", dest="virtual_root", action="store_false", default=None)
    g.add_argument("--require-disjoint-levels", action="store_true", default=None)
    g.add_argument("--split-amp", action="store_true", default=None, help="split gold labels at '&'")
    g.add_argument("--single-np-labels", action="store_true", default=None,
                   help="skip classes whose label is not one noun phrase")
    g.add_argument("--include-root", dest="exclude_root", action="store_false", default=None,
                   help="evaluate top-level classes too")
    g = common.add_argument_group("weighting and labeling")
    g.add_argument("--approach", help="chi_square|jsd|jsd_raw|jsdq|tf_idf|wve|tfs (default tfs)")
    g.add_argument("--wve-m", type=float)
    g.add_argument("--tfs-alpha", type=float)
    g.add_argument("--spec-by-level", help="e.g. '2=tfs:2/3,3=tfs:1/3'")
    g.add_argument("--top-n", type=_int_list, help="labels per class; evaluate accepts a list like 1,3,10")
    g.add_argument("--stoplist", help="label stop list, one term per line")
    g.add_argument("--sweep", action="store_true", default=None, help="evaluate all six approaches")
    g.add_argument("--approaches", help="comma list of approach[:param] to evaluate")
    g.add_argument("--sweep-fields", help="comma list of field sets, e.g. title+keywords,journal+addresses")
    g = common.add_argument_group("run")
    g.add_argument("--threads", type=int, help="worker processes for extraction (default: all CPUs)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output file, prefix or directory")
    g.add_argument("-v", "--verbose", action="store_true")
    g = common.add_argument_group("synthetic baseline")
    for name in ("n_classes", "depth", "pubs_per_class", "vocab_size"):
        g.add_argument("--" + name.replace("_", "-"), type=int)
    g.add_argument("--plant-rate", type=float)
    g.add_argument("--background-rate", type=float)

    parser = argparse.ArgumentParser(prog="hclabel", description="Label classes of hierarchical publication classifications.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic corpus with planted labels")
    sub.add_parser("index", parents=[common], help="build the class x term index")
    sub.add_parser("label", parents=[common], help="write top-N labels per class")
    sub.add_parser("evaluate", parents=[common], help="Match@N against the class labels")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = RunConfig.resolve(args)
        return COMMANDS[args.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HCLabelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
