"""Class hierarchies with publication membership.

Input files:

* class file (JSONL): ``{"class_id": str, "parent_id": str?, "labels": [str]}``
* assignment file (CSV): ``publication_id,class_id``, one row per direct assignment

Parent links must form a forest.  With rollup enabled (the default) each
class's members are its direct assignments plus all descendants' members,
so a child's publications are always a subset of its parent's.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import HierarchyError, InputError
from .extraction import is_single_noun_phrase, normalize_term

log = logging.getLogger(__name__)

#: Key of the virtual root in reference lookups and in the term index.
ROOT = ""


@dataclass(frozen=True)
class HierarchyOptions:
    min_class_size: int = 50
    rollup: bool = True
    require_disjoint_levels: bool = False
    virtual_root: bool = True
    split_amp: bool = False
    require_single_np_labels: bool = False

    def __post_init__(self):
        if self.min_class_size < 0:
            raise ValueError("min_class_size must be >= 0")


@dataclass(frozen=True)
class ClassNode:
    class_id: str
    labels: frozenset[str]
    parent_id: str | None
    level: int
    members: frozenset[str]
    raw_labels: tuple[str, ...] = ()
    multi_np_label: bool = False


@dataclass
class Hierarchy:
    nodes: dict[str, ClassNode]
    options: HierarchyOptions = field(default_factory=HierarchyOptions)
    errors: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.roots = frozenset(c for c, n in self.nodes.items() if n.parent_id is None)
        children = defaultdict(list)
        for c, n in self.nodes.items():
            if n.parent_id is not None:
                children[n.parent_id].append(c)
        self.children = {k: tuple(sorted(v)) for k, v in children.items()}
        everyone: set[str] = set()
        for n in self.nodes.values():
            everyone |= n.members
        self.all_publications = frozenset(everyone)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, class_id: str) -> ClassNode:
        return self.nodes[class_id]

    def __contains__(self, class_id) -> bool:
        return class_id in self.nodes

    @property
    def levels(self) -> list[int]:
        return sorted({n.level for n in self.nodes.values()})

    def parent_key(self, c) -> str | None:
        """Id of the class used as parent for reference statistics.

        Top-level classes map to :data:`ROOT` when the virtual root is on,
        otherwise to ``None``.
        """
        node = self._node(c)
        if node.parent_id is not None:
            return node.parent_id
        return ROOT if self.options.virtual_root else None

    def is_target(self, c) -> bool:
        """Whether a class is labeled and evaluated (large enough, valid label)."""
        node = self._node(c)
        if len(node.members) < self.options.min_class_size:
            return False
        return not (self.options.require_single_np_labels and node.multi_np_label)

    def target_classes(self) -> list[str]:
        return [c for c in sorted(self.nodes) if self.is_target(c)]

    def _node(self, c) -> ClassNode:
        return c if isinstance(c, ClassNode) else self.nodes[c]


def parent_of(c, h: Hierarchy) -> frozenset[str]:
    """Publications of the parent class; all publications for a top-level class."""
    key = h.parent_key(c)
    if key is None:
        return frozenset()
    if key == ROOT:
        return h.all_publications
    return h.nodes[key].members


def reference_collection(c, h: Hierarchy) -> frozenset[str]:
    """Parent publications that are not in the class itself."""
    node = h._node(c)
    return parent_of(node, h) - node.members


def parse_labels(raw: Iterable[str], split_amp: bool = False) -> tuple[tuple[str, ...], frozenset[str]]:
    raw = tuple(raw)
    parts = [p for r in raw for p in (r.split("&") if split_amp else [r])]
    labels = frozenset(t for t in (normalize_term(p) for p in parts) if t)
    return raw, labels


def from_records(
    classes: Iterable[Mapping],
    assignments: Iterable[tuple[str, str]],
    options: HierarchyOptions | None = None,
    publications: Iterable[str] | None = None,
) -> Hierarchy:
    """Build a hierarchy from in-memory class rows and (publication, class) pairs."""
    options = options or HierarchyOptions()
    errors: list[str] = []
    parent: dict[str, str | None] = {}
    raw_labels: dict[str, tuple[str, ...]] = {}
    labels: dict[str, frozenset[str]] = {}
    for row in classes:
        cid = row.get("class_id")
        if not isinstance(cid, str) or not cid:
            raise InputError(f"class row without a class_id: {row!r}")
        if cid in parent:
            raise InputError(f"class {cid!r} declared more than once")
        pid = row.get("parent_id") or None
        parent[cid] = pid
        raw_labels[cid], labels[cid] = parse_labels(row.get("labels") or [], options.split_amp)

    for cid, pid in parent.items():
        if pid is not None and pid not in parent:
            raise HierarchyError(f"class {cid!r} has undeclared parent {pid!r}")

    level = _levels(parent)

    known_pubs = None if publications is None else set(publications)
    direct: dict[str, set[str]] = {c: set() for c in parent}
    for i, (pub, cid) in enumerate(assignments, 1):
        if cid not in direct:
            errors.append(f"assignment {i}: unknown class {cid!r}")
            continue
        if known_pubs is not None and pub not in known_pubs:
            errors.append(f"assignment {i}: unknown publication {pub!r}")
            continue
        direct[cid].add(pub)

    members = {c: set(m) for c, m in direct.items()}
    if options.rollup:
        for cid in sorted(parent, key=lambda c: -level[c]):
            pid = parent[cid]
            if pid is not None:
                members[pid] |= members[cid]

    if options.require_disjoint_levels:
        _check_disjoint(members, level)

    nodes = {
        cid: ClassNode(
            class_id=cid,
            labels=labels[cid],
            parent_id=parent[cid],
            level=level[cid],
            members=frozenset(members[cid]),
            raw_labels=raw_labels[cid],
            multi_np_label=any(not is_single_noun_phrase(r) for r in raw_labels[cid]),
        )
        for cid in parent
    }
    if errors:
        log.warning("hierarchy: %d assignment error(s)", len(errors))
    return Hierarchy(nodes, options, errors)


def _levels(parent: Mapping[str, str | None]) -> dict[str, int]:
    level: dict[str, int] = {}
    for start in parent:
        path = []
        on_path = set()
        c = start
        while c is not None and c not in level:
            if c in on_path:
                cycle = path[path.index(c):] + [c]
                raise HierarchyError("cycle in class hierarchy: " + " -> ".join(cycle))
            on_path.add(c)
            path.append(c)
            c = parent[c]
        base = 0 if c is None else level[c]
        for depth, node in enumerate(reversed(path), 1):
            level[node] = base + depth
    return level


def _check_disjoint(members: Mapping[str, set[str]], level: Mapping[str, int]) -> None:
    owner: dict[tuple[int, str], str] = {}
    for cid in sorted(members):
        for pub in sorted(members[cid]):
            key = (level[cid], pub)
            other = owner.setdefault(key, cid)
            if other != cid:
                raise HierarchyError(
                    f"classes {other!r} and {cid!r} at level {level[cid]} share publication {pub!r}"
                )


def read_class_file(path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"class file not found: {path}")
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict):
                raise InputError(f"{path}:{lineno}: expected an object")
            rows.append(row)
    return rows


def read_assignment_file(path) -> list[tuple[str, str]]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"assignment file not found: {path}")
    pairs = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or (reader.line_num == 1 and row[:2] == ["publication_id", "class_id"]):
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{reader.line_num}: expected publication_id,class_id")
            pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def build_hierarchy(
    class_file,
    assignment_file,
    options: HierarchyOptions | None = None,
    publications: Iterable[str] | None = None,
) -> Hierarchy:
    """Read class and assignment files into a validated :class:`Hierarchy`."""
    return from_records(
        read_class_file(class_file), read_assignment_file(assignment_file), options, publications
    )


def write_hierarchy(h: Hierarchy, class_file, assignment_file, direct: Mapping[str, Iterable[str]] | None = None) -> None:
    """Write class/assignment files; ``direct`` defaults to each class's full member set."""
    with Path(class_file).open("w", encoding="utf-8") as fh:
        for cid in sorted(h.nodes, key=lambda c: (h.nodes[c].level, c)):
            n = h.nodes[cid]
            row = {"class_id": cid, "parent_id": n.parent_id, "labels": list(n.raw_labels)}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    with Path(assignment_file).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["publication_id", "class_id"])
        for cid in sorted(h.nodes):
            pubs = h.nodes[cid].members if direct is None else direct.get(cid, ())
            for pub in sorted(pubs):
                w.writerow([pub, cid])
