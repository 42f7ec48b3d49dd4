"""Publication records and corpus ingestion.

JSONL is the canonical input format, one publication object per line::

    {"id": "p1", "title": "...", "abstract": "...", "keywords": ["..."],
     "journal": "...", "addresses": ["..."], "pretagged_terms": {"title": ["..."]}}

CSV is accepted for flat records with columns
``id,title,abstract,keywords,journal,addresses``; keyword and address
lists are ``;``-delimited.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import InputError

log = logging.getLogger(__name__)

#: Fixed order in which fields are visited by :func:`field_view`.
FIELD_ORDER = ("title", "keywords", "abstract", "journal", "addresses")
FIELD_NAMES = frozenset(FIELD_ORDER)

_LIST_DELIM = ";"


@dataclass(frozen=True)
class PublicationRecord:
    id: str
    title: str = ""
    abstract: str | None = None
    keywords: tuple[str, ...] = ()
    journal: str | None = None
    addresses: tuple[str, ...] = ()
    pretagged_terms: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("publication id must be a non-empty string")
        if self.pretagged_terms is not None:
            bad = set(self.pretagged_terms) - FIELD_NAMES
            if bad:
                raise ValueError(f"unknown pretagged field(s): {sorted(bad)}")

    @classmethod
    def from_dict(cls, obj: Mapping) -> "PublicationRecord":
        if not isinstance(obj, Mapping):
            raise ValueError("record is not an object")
        pid = obj.get("id")
        if pid is None or pid == "":
            raise ValueError("missing id")
        if not isinstance(pid, str):
            raise ValueError("id must be a string")
        pretagged = obj.get("pretagged_terms")
        if pretagged is not None:
            if not isinstance(pretagged, Mapping):
                raise ValueError("pretagged_terms must be an object")
            pretagged = {k: tuple(_str_list(v, f"pretagged_terms.{k}")) for k, v in pretagged.items()}
        return cls(
            id=pid,
            title=_opt_str(obj.get("title"), "title") or "",
            abstract=_opt_str(obj.get("abstract"), "abstract"),
            keywords=tuple(_str_list(obj.get("keywords") or [], "keywords")),
            journal=_opt_str(obj.get("journal"), "journal"),
            addresses=tuple(_str_list(obj.get("addresses") or [], "addresses")),
            pretagged_terms=pretagged,
        )

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "keywords": list(self.keywords),
            "journal": self.journal,
            "addresses": list(self.addresses),
        }
        if self.pretagged_terms is not None:
            out["pretagged_terms"] = {k: list(v) for k, v in self.pretagged_terms.items()}
        return out


def _opt_str(value, name):
    if value is None or isinstance(value, str):
        return value
    raise ValueError(f"{name} must be a string")


def _str_list(value, name):
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{name} must be a list of strings")
    return value


class FieldSet(frozenset):
    """Non-empty set of bibliographic field names."""

    def __new__(cls, members: Iterable[str] = ()):
        if isinstance(members, str):
            members = [m.strip() for m in members.replace("+", ",").split(",") if m.strip()]
        members = frozenset(members)
        if not members:
            raise ValueError("a field set needs at least one field")
        bad = members - FIELD_NAMES
        if bad:
            raise ValueError(f"unknown field(s): {', '.join(sorted(bad))}")
        return super().__new__(cls, members)

    def ordered(self) -> tuple[str, ...]:
        return tuple(f for f in FIELD_ORDER if f in self)

    def __str__(self):
        return "+".join(self.ordered())

    def __repr__(self):
        return f"FieldSet({str(self)!r})"


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str
    record_id: str | None = None


@dataclass(frozen=True)
class Corpus(Sequence[PublicationRecord]):
    """Immutable, ordered collection of publication records with unique ids."""

    records: tuple[PublicationRecord, ...]
    rejected: tuple[Rejection, ...] = ()
    _by_id: Mapping[str, int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for i, r in enumerate(self.records):
            if r.id in by_id:
                raise ValueError(f"duplicate publication id {r.id!r}")
            by_id[r.id] = i
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self) -> Iterator[PublicationRecord]:
        return iter(self.records)

    def __contains__(self, pid) -> bool:
        return pid in self._by_id

    def get(self, pid: str) -> PublicationRecord:
        return self.records[self._by_id[pid]]

    def position(self, pid: str) -> int:
        return self._by_id[pid]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)


def _iter_jsonl(path: Path):
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line), None
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON: {exc.msg}"


def _iter_csv(path: Path):
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise InputError(f"{path}: CSV header must include an 'id' column")
        for row in reader:
            lineno = reader.line_num
            if None in row:
                yield lineno, None, "too many columns"
                continue
            yield lineno, {
                "id": row.get("id") or None,
                "title": row.get("title") or "",
                "abstract": row.get("abstract") or None,
                "keywords": _split_list(row.get("keywords")),
                "journal": row.get("journal") or None,
                "addresses": _split_list(row.get("addresses")),
            }, None


def _split_list(cell):
    if not cell:
        return []
    return [part.strip() for part in cell.split(_LIST_DELIM) if part.strip()]


def ingest_corpus(path, format: str | None = None) -> Corpus:
    """Read publication records from a JSONL or CSV file.

    Malformed rows and rows with a missing or duplicate id are collected in
    ``Corpus.rejected``; ingestion continues past them. The format is
    inferred from the file suffix when not given.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"corpus not found: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise InputError(f"unsupported corpus format: {format}")
    rows = _iter_jsonl(path) if format == "jsonl" else _iter_csv(path)

    records: list[PublicationRecord] = []
    rejected: list[Rejection] = []
    seen: set[str] = set()
    try:
        for lineno, obj, err in rows:
            if err is not None:
                rejected.append(Rejection(lineno, err))
                continue
            try:
                rec = PublicationRecord.from_dict(obj)
            except ValueError as exc:
                pid = obj.get("id") if isinstance(obj, Mapping) else None
                rejected.append(Rejection(lineno, str(exc), pid if isinstance(pid, str) else None))
                continue
            if rec.id in seen:
                rejected.append(Rejection(lineno, "duplicate id", rec.id))
                continue
            seen.add(rec.id)
            records.append(rec)
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc

    if rejected:
        log.warning("%s: rejected %d record(s)", path, len(rejected))
    if not records:
        raise InputError(f"no valid records in {path}")
    return Corpus(tuple(records), tuple(rejected))


def write_corpus(corpus: Iterable[PublicationRecord], path) -> None:
    """Write records as canonical JSONL (stable key order)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in corpus:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def field_view(record: PublicationRecord, fields: Iterable[str]) -> list[tuple[str, str]]:
    """Return ``(field, text)`` pairs for the selected fields of a record.

    Pairs come in title, keywords, abstract, journal, addresses order; list
    fields expand to one pair per element and absent fields contribute nothing.
    """
    selected = fields if isinstance(fields, FieldSet) else FieldSet(fields)
    out: list[tuple[str, str]] = []
    for name in selected.ordered():
        value = getattr(record, name)
        if value is None:
            continue
        if isinstance(value, tuple):
            out.extend((name, v) for v in value if v)
        elif value:
            out.append((name, value))
    return out
