"""Class x term publication-frequency index.

``tf(t, c)`` is the number of publications in class ``c`` whose selected
fields contain term ``t``.  All terms are stored, including those below the
support threshold: the threshold only decides which terms are candidates
for labeling the focal class, while parent-class counts must include
everything.

On-disk format (little endian)::

    b"TXIDX1\\n"
    u64 header length, header JSON (UTF-8, sorted keys)
    u64 byte length, terms joined by "\\n" (UTF-8, sorted)
    u64 n, then three u32 columns of n values: class index, term index, count
    u64 m, then three u32 columns of m values for the overlap section

Class and term indices follow sorted order, so triples are sorted by
``(class_id, term)``.  The overlap section holds counts over
``members(c) & members(parent(c))`` for classes that are not contained in
their parent (only possible with rollup disabled).
"""

from __future__ import annotations

import io
import json
import logging
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, FieldSet
from .errors import InputError
from .extraction import Extractor
from .hierarchy import ROOT, Hierarchy

log = logging.getLogger(__name__)

MAGIC = b"TXIDX1\n"
FORMAT_VERSION = 1
DEFAULT_SUPPORT_THRESHOLD = 3

# below this many records extraction stays in-process whatever the thread count
PARALLEL_MIN_RECORDS = 2000


@dataclass(frozen=True)
class ClassRow:
    """Sparse tf row of one class: sorted term indices and their counts."""

    terms: np.ndarray
    counts: np.ndarray

    def lookup(self, term_idx: np.ndarray) -> np.ndarray:
        """Counts for ``term_idx`` (0 where the term is absent)."""
        if len(self.terms) == 0:
            return np.zeros(len(term_idx), dtype=np.int64)
        pos = np.searchsorted(self.terms, term_idx)
        pos = np.minimum(pos, len(self.terms) - 1)
        hit = self.terms[pos] == term_idx
        return np.where(hit, self.counts[pos], 0)


class TermIndex:
    def __init__(
        self,
        class_ids: Sequence[str],
        terms: Sequence[str],
        tf: sparse.csr_matrix,
        class_size: np.ndarray,
        support_threshold: int = DEFAULT_SUPPORT_THRESHOLD,
        overlap: dict[str, ClassRow] | None = None,
        meta: dict | None = None,
    ):
        if list(class_ids) != sorted(class_ids) or len(set(class_ids)) != len(class_ids):
            raise ValueError("class ids must be unique and sorted")
        if list(terms) != sorted(terms) or len(set(terms)) != len(terms):
            raise ValueError("terms must be unique and sorted")
        if support_threshold < 1:
            raise ValueError("support_threshold must be >= 1")
        self.class_ids = tuple(class_ids)
        self.terms = tuple(terms)
        self.class_pos = {c: i for i, c in enumerate(self.class_ids)}
        self.term_pos = {t: i for i, t in enumerate(self.terms)}
        tf = sparse.csr_matrix(tf, dtype=np.int64)
        tf.eliminate_zeros()
        tf.sort_indices()
        self.tf_matrix = tf
        self.class_size = np.asarray(class_size, dtype=np.int64)
        self.term_totals = np.asarray(tf.sum(axis=1)).ravel().astype(np.int64)
        self.support_threshold = int(support_threshold)
        self.overlap = dict(overlap or {})
        self.meta = dict(meta or {})

    @classmethod
    def from_counts(cls, counts: dict, class_size: dict, support_threshold: int = DEFAULT_SUPPORT_THRESHOLD, **kw):
        """Build from ``{class_id: {term: tf}}`` and ``{class_id: size}`` mappings."""
        class_ids = sorted(set(class_size) | set(counts))
        terms = sorted({t for row in counts.values() for t in row})
        tpos = {t: i for i, t in enumerate(terms)}
        rows, cols, vals = [], [], []
        for i, c in enumerate(class_ids):
            for t, n in counts.get(c, {}).items():
                if n:
                    rows.append(i)
                    cols.append(tpos[t])
                    vals.append(n)
        tf = sparse.csr_matrix((vals, (rows, cols)), shape=(len(class_ids), len(terms)), dtype=np.int64)
        sizes = np.array([class_size.get(c, 0) for c in class_ids], dtype=np.int64)
        return cls(class_ids, terms, tf, sizes, support_threshold, **kw)

    def __contains__(self, class_id) -> bool:
        return class_id in self.class_pos

    def _pos(self, class_id: str) -> int:
        try:
            return self.class_pos[class_id]
        except KeyError:
            raise KeyError(f"class {class_id!r} not in index") from None

    def row(self, class_id: str) -> ClassRow:
        i = self._pos(class_id)
        lo, hi = self.tf_matrix.indptr[i], self.tf_matrix.indptr[i + 1]
        return ClassRow(self.tf_matrix.indices[lo:hi], self.tf_matrix.data[lo:hi])

    def overlap_row(self, class_id: str) -> ClassRow:
        """tf over the part of the class that lies inside its parent."""
        return self.overlap.get(class_id) or self.row(class_id)

    def tf(self, class_id: str, term: str) -> int:
        i = self._pos(class_id)
        j = self.term_pos.get(term)
        return 0 if j is None else int(self.tf_matrix[i, j])

    def size(self, class_id: str) -> int:
        return int(self.class_size[self._pos(class_id)])

    def totals(self, class_id: str) -> int:
        return int(self.term_totals[self._pos(class_id)])

    def counts(self, class_id: str) -> dict[str, int]:
        r = self.row(class_id)
        return {self.terms[j]: int(n) for j, n in zip(r.terms, r.counts)}

    def candidate_mask(self, class_id: str) -> ClassRow:
        r = self.row(class_id)
        keep = r.counts >= self.support_threshold
        return ClassRow(r.terms[keep], r.counts[keep])

    def triples(self) -> Iterable[tuple[str, str, int]]:
        coo = self.tf_matrix.tocoo()
        for i, j, n in zip(coo.row, coo.col, coo.data):
            yield self.class_ids[i], self.terms[j], int(n)

    # ------------------------------------------------------------ persistence

    def header(self) -> dict:
        return {
            "format": "TXIDX",
            "version": FORMAT_VERSION,
            "support_threshold": self.support_threshold,
            "classes": [[c, int(s)] for c, s in zip(self.class_ids, self.class_size)],
            "overlap": {c: _row_size(r) for c, r in sorted(self.overlap.items())},
            **{k: v for k, v in self.meta.items() if k not in {"classes", "overlap"}},
        }

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(MAGIC)
        header = json.dumps(self.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        buf.write(struct.pack("<Q", len(header)))
        buf.write(header)
        blob = "\n".join(self.terms).encode("utf-8")
        buf.write(struct.pack("<Q", len(blob)))
        buf.write(blob)
        coo = self.tf_matrix.tocoo()
        _write_columns(buf, coo.row, coo.col, coo.data)
        orow, ocol, odata = [], [], []
        for c in sorted(self.overlap):
            r = self.overlap[c]
            orow.append(np.full(len(r.terms), self.class_pos[c]))
            ocol.append(r.terms)
            odata.append(r.counts)
        cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        _write_columns(buf, cat(orow), cat(ocol), cat(odata))
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "TermIndex":
        if not data.startswith(MAGIC):
            raise InputError("not a term index file (bad magic)")
        buf = io.BytesIO(data)
        buf.seek(len(MAGIC))
        (n,) = struct.unpack("<Q", buf.read(8))
        header = json.loads(buf.read(n).decode("utf-8"))
        if header.get("version") != FORMAT_VERSION:
            raise InputError(f"unsupported index version {header.get('version')}")
        (n,) = struct.unpack("<Q", buf.read(8))
        blob = buf.read(n).decode("utf-8")
        n_classes = len(header["classes"])
        # an empty blob is ambiguous between no terms and one empty term; terms are never empty
        terms = blob.split("\n") if blob else []
        rows, cols, vals = _read_columns(buf)
        tf = sparse.csr_matrix((vals, (rows, cols)), shape=(n_classes, len(terms)), dtype=np.int64)
        class_ids = [c for c, _ in header["classes"]]
        sizes = np.array([s for _, s in header["classes"]], dtype=np.int64)
        orows, ocols, ovals = _read_columns(buf)
        overlap = {}
        for i in np.unique(orows):
            sel = orows == i
            overlap[class_ids[i]] = ClassRow(ocols[sel].astype(np.int64), ovals[sel].astype(np.int64))
        meta = {k: v for k, v in header.items() if k not in {"format", "version", "support_threshold", "classes", "overlap"}}
        return cls(class_ids, terms, tf, sizes, header["support_threshold"], overlap, meta)

    @classmethod
    def load(cls, path) -> "TermIndex":
        path = Path(path)
        if not path.is_file():
            raise InputError(f"index not found: {path}")
        return cls.from_bytes(path.read_bytes())


def _row_size(r: ClassRow) -> int:
    return int(r.counts.sum())


def _write_columns(buf, *cols):
    n = len(cols[0])
    buf.write(struct.pack("<Q", n))
    for col in cols:
        arr = np.asarray(col)
        if n and (arr.min() < 0 or arr.max() > 0xFFFFFFFF):
            raise OverflowError("index value does not fit in u32")
        buf.write(arr.astype("<u4").tobytes())


def _read_columns(buf):
    (n,) = struct.unpack("<Q", buf.read(8))
    return tuple(np.frombuffer(buf.read(4 * n), dtype="<u4").astype(np.int64) for _ in range(3))


# ------------------------------------------------------------------ build

def _extract_chunk(args):
    extractor, records, fields = args
    return [sorted(extractor.terms(r, fields)) for r in records]


def extract_all(records, fields, extractor: Extractor, threads: int = 1) -> list[list[str]]:
    """Sorted term list per record, in input order.

    With ``threads > 1`` and enough records the work is split into
    contiguous chunks handled by worker processes; results are reassembled
    in input order, so the output does not depend on the thread count.
    """
    records = list(records)
    if threads <= 1 or len(records) < PARALLEL_MIN_RECORDS:
        return [sorted(extractor.terms(r, fields)) for r in records]
    n_chunks = threads * 4
    size = -(-len(records) // n_chunks)
    chunks = [(extractor, records[i : i + size], fields) for i in range(0, len(records), size)]
    out: list[list[str]] = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(_extract_chunk, chunks):
            out.extend(part)
    return out


def build_index(
    corpus: Corpus,
    hierarchy: Hierarchy,
    fields,
    extractor: Extractor | None = None,
    support_threshold: int = DEFAULT_SUPPORT_THRESHOLD,
    threads: int = 1,
    pub_terms: dict[str, Sequence[str]] | None = None,
) -> TermIndex:
    """Count, for every class, the publications containing each term.

    ``pub_terms`` may supply precomputed term lists per publication id (used
    by sweeps that reuse per-field extraction across field sets).
    """
    fields = fields if isinstance(fields, FieldSet) else FieldSet(fields)
    extractor = extractor or Extractor()
    missing = sorted(p for p in hierarchy.all_publications if p not in corpus)
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise InputError(f"{len(missing)} hierarchy member(s) missing from corpus: {shown}")

    pubs = sorted(hierarchy.all_publications)
    if pub_terms is None:
        term_lists = extract_all((corpus.get(p) for p in pubs), fields, extractor, threads)
    else:
        term_lists = [pub_terms[p] for p in pubs]

    vocab = sorted({t for ts in term_lists for t in ts})
    tpos = {t: i for i, t in enumerate(vocab)}
    indptr = np.zeros(len(pubs) + 1, dtype=np.int64)
    np.cumsum([len(ts) for ts in term_lists], out=indptr[1:])
    indices = np.fromiter((tpos[t] for ts in term_lists for t in ts), dtype=np.int64, count=int(indptr[-1]))
    X = sparse.csr_matrix((np.ones(len(indices), dtype=np.int64), indices, indptr), shape=(len(pubs), len(vocab)))

    ppos = {p: i for i, p in enumerate(pubs)}
    class_ids = sorted(hierarchy.nodes)
    member_sets = [hierarchy.nodes[c].members for c in class_ids]
    if hierarchy.options.virtual_root:
        class_ids = [ROOT] + class_ids
        member_sets = [hierarchy.all_publications] + member_sets
    M = _membership(member_sets, ppos)
    tf = (M @ X).tocsr()
    sizes = np.array([len(m) for m in member_sets], dtype=np.int64)

    overlap_sets = {}
    for cid in sorted(hierarchy.nodes):
        pkey = hierarchy.parent_key(cid)
        if pkey is None:
            continue
        node = hierarchy.nodes[cid]
        parent = hierarchy.all_publications if pkey == ROOT else hierarchy.nodes[pkey].members
        if not node.members <= parent:
            overlap_sets[cid] = node.members & parent
    overlap = {}
    if overlap_sets:
        keys = sorted(overlap_sets)
        O = (_membership([overlap_sets[k] for k in keys], ppos) @ X).tocsr()
        O.sort_indices()
        for i, k in enumerate(keys):
            lo, hi = O.indptr[i], O.indptr[i + 1]
            overlap[k] = ClassRow(O.indices[lo:hi].astype(np.int64), O.data[lo:hi].astype(np.int64))

    meta = {
        "fields": list(fields.ordered()),
        "extraction_mode": extractor.mode,
        "n_publications": len(pubs),
    }
    idx = TermIndex(class_ids, vocab, tf, sizes, support_threshold, overlap, meta)
    log.info("index: %d publications, %d classes, %d terms", len(pubs), len(class_ids), len(vocab))
    return idx


def _membership(member_sets, ppos) -> sparse.csr_matrix:
    rows, cols = [], []
    for i, members in enumerate(member_sets):
        cols.extend(sorted(ppos[p] for p in members))
        rows.extend([i] * len(members))
    data = np.ones(len(rows), dtype=np.int64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(member_sets), len(ppos)))


def candidate_terms(c: str, idx: TermIndex) -> set[str]:
    """Terms occurring in at least ``support_threshold`` publications of ``c``."""
    r = idx.candidate_mask(c)
    return {idx.terms[j] for j in r.terms}


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def build_indexes(
    corpus: Corpus,
    hierarchy: Hierarchy,
    field_sets: Sequence[FieldSet],
    extractor: Extractor | None = None,
    support_threshold: int = DEFAULT_SUPPORT_THRESHOLD,
    threads: int = 1,
) -> dict[FieldSet, TermIndex]:
    """One index per field set, extracting each publication's fields only once."""
    extractor = extractor or Extractor()
    field_sets = [fs if isinstance(fs, FieldSet) else FieldSet(fs) for fs in field_sets]
    if len(field_sets) == 1:
        fs = field_sets[0]
        return {fs: build_index(corpus, hierarchy, fs, extractor, support_threshold, threads)}
    union = FieldSet(f for fs in field_sets for f in fs)
    pubs = sorted(p for p in hierarchy.all_publications if p in corpus)
    per_field = _field_terms_all([corpus.get(p) for p in pubs], union, extractor, threads)
    out = {}
    for fs in field_sets:
        pub_terms = {}
        for pid, by_field in zip(pubs, per_field):
            terms = set()
            for name in fs:
                terms.update(by_field.get(name, ()))
            pub_terms[pid] = sorted(terms)
        out[fs] = build_index(corpus, hierarchy, fs, extractor, support_threshold, threads, pub_terms=pub_terms)
    return out


def _field_chunk(args):
    extractor, records, fields = args
    return [extractor.field_terms(r, fields) for r in records]


def _field_terms_all(records, fields, extractor, threads):
    if threads <= 1 or len(records) < PARALLEL_MIN_RECORDS:
        return [extractor.field_terms(r, fields) for r in records]
    size = -(-len(records) // (threads * 4))
    chunks = [(extractor, records[i : i + size], fields) for i in range(0, len(records), size)]
    out = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(_field_chunk, chunks):
            out.extend(part)
    return out
