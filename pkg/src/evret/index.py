"""Immutable searchable store of encoded documents.

Exact search scores the query against every document. Approximate search
runs two stages: per query token, find the `probe` highest-inner-product
rows in the flat token pool, union the owning documents into a candidate
set, then rerank just the candidates with the exact score. Candidate
scores are computed from the same similarity matrix in both paths, so an
approximate hit's score always equals its exact-search score bit for bit.

Token rows are stored in float32 (the on-disk format) and upcast to
float64 for scoring, which makes save/load roundtrips score-preserving.

Index file layout (little-endian):
    magic "OFARIDX1" (8 bytes), u32 version=1, u32 D, u32 pad_len,
    u64 doc_count,
    per doc: u64 id-length, UTF-8 id bytes, u32 true-token count,
             row-major f32 token rows,
    then the token pool back-pointer table: one (u64 token index,
    u64 doc index) pair per pool row.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import TokenMatrix
from .errors import (
    BadMagicError,
    CorruptLengthError,
    DimMismatchError,
    DuplicateIdError,
    EmptyMaskError,
    EmptySequenceError,
    VersionMismatchError,
)
from .scoring import ScoreResult

INDEX_MAGIC = b"OFARIDX1"
INDEX_VERSION = 1
DEFAULT_PROBE = 32


@dataclass(frozen=True)
class Hit:
    doc_id: str
    score: float
    attributions: ScoreResult


@dataclass(frozen=True)
class RankedHits:
    """Ordered search results: scores non-increasing, ties by ascending doc_id."""

    entries: tuple[Hit, ...]
    k_requested: int


@dataclass(frozen=True)
class RetrievalIndex:
    """Flat token pool plus per-document offsets and id map; never mutated."""

    doc_ids: tuple[str, ...]
    pool: np.ndarray       # (total_tokens, D) float32, document-major
    offsets: np.ndarray    # (n_docs + 1,) int64; doc i owns pool[offsets[i]:offsets[i+1]]
    token_doc: np.ndarray  # (total_tokens,) int64 back-pointers
    pad_len: int

    def __post_init__(self):
        self.pool.setflags(write=False)
        self.offsets.setflags(write=False)
        self.token_doc.setflags(write=False)

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def dim(self) -> int:
        return self.pool.shape[1]

    @property
    def n_tokens(self) -> int:
        return self.pool.shape[0]

    @cached_property
    def _pool64(self) -> np.ndarray:
        return self.pool.astype(np.float64)

    @cached_property
    def _id_order(self) -> np.ndarray:
        """Doc positions sorted by id, used for deterministic tie-breaking."""
        return np.argsort(np.asarray(self.doc_ids))

    def doc_matrix(self, i: int) -> TokenMatrix:
        """Document i's real token rows as a dense all-true TokenMatrix."""
        rows = self._pool64[self.offsets[i] : self.offsets[i + 1]]
        return TokenMatrix(rows=rows.copy(), mask=np.ones(rows.shape[0], dtype=bool))

    def first_token_rows(self) -> np.ndarray:
        """Each document's first real token row (float64), for single-vector ranking."""
        return self._pool64[self.offsets[:-1]]


def build_index(docs) -> RetrievalIndex:
    """Assemble an index from encoded items; layout follows input order."""
    docs = list(docs)
    if not docs:
        raise EmptySequenceError("cannot build an index from zero documents")
    dims = {d.matrix.dim for d in docs}
    if len(dims) != 1:
        raise DimMismatchError(f"documents have mixed embedding dims: {sorted(dims)}")
    seen: set[str] = set()
    for d in docs:
        if d.source_id in seen:
            raise DuplicateIdError(f"duplicate doc_id {d.source_id!r}")
        seen.add(d.source_id)

    blocks = [d.matrix.true_rows().astype(np.float32) for d in docs]
    counts = np.array([b.shape[0] for b in blocks], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    pool = np.vstack(blocks)
    token_doc = np.repeat(np.arange(len(docs), dtype=np.int64), counts)
    return RetrievalIndex(
        doc_ids=tuple(d.source_id for d in docs),
        pool=pool,
        offsets=offsets,
        token_doc=token_doc,
        pad_len=max(d.matrix.pad_len for d in docs),
    )


def _query_pool_sims(index: RetrievalIndex, q: TokenMatrix) -> tuple[np.ndarray, np.ndarray]:
    if q.dim != index.dim:
        raise DimMismatchError(f"query dim {q.dim} != index dim {index.dim}")
    if not q.mask.any():
        raise EmptyMaskError("query has no real token rows")
    q_idx = np.flatnonzero(q.mask)
    sims = q.rows[q_idx] @ index._pool64.T  # (n_q, total_tokens)
    return q_idx, sims


def _rank_top_k(index: RetrievalIndex, doc_positions: np.ndarray, scores: np.ndarray, k: int):
    """Order candidate positions by (-score, doc_id) and clip to k."""
    ids = np.asarray([index.doc_ids[i] for i in doc_positions])
    order = np.lexsort((ids, -scores))
    return [(int(doc_positions[j]), float(scores[j])) for j in order[:k]]


def _hits_from_positions(index, ranked, q_idx, sims, k) -> RankedHits:
    entries = []
    for pos, score in ranked:
        block = sims[:, index.offsets[pos] : index.offsets[pos + 1]]
        best = np.argmax(block, axis=1)  # ties -> lowest document row
        partial = block[np.arange(block.shape[0]), best]
        entries.append(
            Hit(
                doc_id=index.doc_ids[pos],
                score=score,
                attributions=ScoreResult(
                    score=float(partial.sum()),
                    query_rows=q_idx,
                    doc_rows=best.astype(np.int64),
                    sims=partial,
                ),
            )
        )
    return RankedHits(entries=tuple(entries), k_requested=k)


def search_exact(index: RetrievalIndex, q: TokenMatrix, k: int) -> RankedHits:
    """Score every document, return the top k (ties by ascending doc_id)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q_idx, sims = _query_pool_sims(index, q)
    seg_max = np.maximum.reduceat(sims, index.offsets[:-1], axis=1)  # (n_q, n_docs)
    scores = seg_max.sum(axis=0)
    ranked = _rank_top_k(index, np.arange(index.n_docs), scores, k)
    return _hits_from_positions(index, ranked, q_idx, sims, k)


def search_approx(
    index: RetrievalIndex, q: TokenMatrix, k: int, probe: int = DEFAULT_PROBE
) -> RankedHits:
    """Two-stage search: token-level candidate generation, then exact rerank.

    With probe >= the pool size every document becomes a candidate and the
    output is identical to search_exact.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if probe < 1:
        raise ValueError(f"probe must be >= 1, got {probe}")
    q_idx, sims = _query_pool_sims(index, q)

    if probe >= index.n_tokens:
        cand = np.arange(index.n_docs)
    else:
        top = np.argpartition(sims, -probe, axis=1)[:, -probe:]
        cand = np.unique(index.token_doc[top.ravel()])

    cand_max = np.stack(
        [sims[:, index.offsets[c] : index.offsets[c + 1]].max(axis=1) for c in cand],
        axis=1,
    )
    scores = cand_max.sum(axis=0)
    ranked = _rank_top_k(index, cand, scores, k)
    return _hits_from_positions(index, ranked, q_idx, sims, k)


def save_index(index: RetrievalIndex, path) -> None:
    path = Path(path)
    with open(path, "wb") as f:
        f.write(INDEX_MAGIC)
        f.write(struct.pack("<III", INDEX_VERSION, index.dim, index.pad_len))
        f.write(struct.pack("<Q", index.n_docs))
        for i, doc_id in enumerate(index.doc_ids):
            raw = doc_id.encode("utf-8")
            f.write(struct.pack("<Q", len(raw)))
            f.write(raw)
            lo, hi = index.offsets[i], index.offsets[i + 1]
            f.write(struct.pack("<I", int(hi - lo)))
            f.write(np.ascontiguousarray(index.pool[lo:hi], dtype="<f4").tobytes())
        pairs = np.empty((index.n_tokens, 2), dtype="<u8")
        pairs[:, 0] = np.arange(index.n_tokens)
        pairs[:, 1] = index.token_doc
        f.write(pairs.tobytes())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptLengthError(
                f"file truncated: needed {n} bytes at offset {self.pos}, "
                f"only {len(self.data) - self.pos} remain"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_index(path) -> RetrievalIndex:
    with open(path, "rb") as f:
        r = _Reader(f.read())
    magic = r.take(len(INDEX_MAGIC))
    if magic != INDEX_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {INDEX_MAGIC!r}")
    version, dim, pad_len = r.unpack("<III")
    if version != INDEX_VERSION:
        raise VersionMismatchError(f"unsupported index version {version}")
    (n_docs,) = r.unpack("<Q")

    doc_ids: list[str] = []
    blocks: list[np.ndarray] = []
    counts = np.empty(n_docs, dtype=np.int64)
    for i in range(n_docs):
        (id_len,) = r.unpack("<Q")
        doc_ids.append(r.take(int(id_len)).decode("utf-8"))
        (n_tok,) = r.unpack("<I")
        if n_tok < 1:
            raise CorruptLengthError(f"document {doc_ids[-1]!r} has zero token rows")
        counts[i] = n_tok
        raw = r.take(4 * n_tok * dim)
        blocks.append(np.frombuffer(raw, dtype="<f4").reshape(n_tok, dim).astype(np.float32))

    total = int(counts.sum())
    pair_bytes = r.take(16 * total)
    if r.pos != len(r.data):
        raise CorruptLengthError(f"{len(r.data) - r.pos} trailing bytes after back-pointer table")
    pairs = np.frombuffer(pair_bytes, dtype="<u8").reshape(total, 2)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    expected_doc = np.repeat(np.arange(n_docs, dtype=np.uint64), counts)
    if not (pairs[:, 0] == np.arange(total, dtype=np.uint64)).all() or not (
        pairs[:, 1] == expected_doc
    ).all():
        raise CorruptLengthError("back-pointer table is inconsistent with document layout")

    ids = tuple(doc_ids)
    if len(set(ids)) != len(ids):
        raise DuplicateIdError("index file contains duplicate doc ids")
    return RetrievalIndex(
        doc_ids=ids,
        pool=np.vstack(blocks) if blocks else np.empty((0, dim), dtype=np.float32),
        offsets=offsets,
        token_doc=pairs[:, 1].astype(np.int64),
        pad_len=pad_len,
    )
