"""Late-interaction relevance scoring.

The primary score sums, over the real query token rows, the maximum inner
product against the real document token rows. Because all rows are unit
norm, each inner product is a cosine similarity, and the score is bounded
by the number of real query tokens.

Padding rows never participate: they are excluded from both the max and
the sum. Argmax ties resolve to the lowest document row index so that
attributions are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TokenMatrix
from .errors import DimMismatchError, EmptyMaskError

MAXSIM = "maxsim"
SINGLE = "single"
SCORE_MODES = (MAXSIM, SINGLE)


@dataclass(frozen=True)
class ScoreResult:
    """A relevance score decomposed into per-query-token contributions.

    query_rows[i] is the index (into the query matrix) of the i-th real
    query token; doc_rows[i] is the document row it matched; sims[i] is
    their inner product. score == sims.sum() within 1e-9.
    """

    score: float
    query_rows: np.ndarray
    doc_rows: np.ndarray
    sims: np.ndarray

    def attribution_records(self) -> list[dict]:
        """Attributions as JSON-ready dicts (for the search API / console)."""
        return [
            {"q_token_index": int(q), "d_token_index": int(d), "sim": float(s)}
            for q, d, s in zip(self.query_rows, self.doc_rows, self.sims)
        ]


def _check_pair(q: TokenMatrix, d: TokenMatrix) -> None:
    if q.dim != d.dim:
        raise DimMismatchError(f"query dim {q.dim} != document dim {d.dim}")
    if not q.mask.any() or not d.mask.any():
        raise EmptyMaskError("both matrices need at least one real token row")


def maxsim_score(q: TokenMatrix, d: TokenMatrix) -> ScoreResult:
    """Sum over real query tokens of the max inner product over real doc tokens."""
    _check_pair(q, d)
    q_idx = np.flatnonzero(q.mask)
    d_idx = np.flatnonzero(d.mask)
    sims = q.rows[q_idx] @ d.rows[d_idx].T  # (n_q, n_d), float64
    best = np.argmax(sims, axis=1)  # first occurrence == lowest index on ties
    partial = sims[np.arange(len(q_idx)), best]
    return ScoreResult(
        score=float(partial.sum()),
        query_rows=q_idx,
        doc_rows=d_idx[best],
        sims=partial,
    )


def single_vector_score(q: TokenMatrix, d: TokenMatrix) -> float:
    """Inner product of the two items' first real rows (summary-token variant)."""
    _check_pair(q, d)
    qi = int(np.flatnonzero(q.mask)[0])
    di = int(np.flatnonzero(d.mask)[0])
    return float(q.rows[qi] @ d.rows[di])


def batch_score_matrix(queries, docs, mode: str = MAXSIM) -> np.ndarray:
    """Score every query against every document.

    Returns a B x B float64 matrix with entry (u, b) = score of queries[u]
    against docs[b] under the chosen mode.
    """
    if mode not in SCORE_MODES:
        raise ValueError(f"mode must be one of {SCORE_MODES}, got {mode!r}")
    if len(queries) == 0 or len(docs) == 0:
        raise ValueError("queries and docs must be non-empty")
    dims = {q.dim for q in queries} | {d.dim for d in docs}
    if len(dims) != 1:
        raise DimMismatchError(f"mixed embedding dims in batch: {sorted(dims)}")
    out = np.empty((len(queries), len(docs)), dtype=np.float64)
    for u, q in enumerate(queries):
        for b, d in enumerate(docs):
            if mode == MAXSIM:
                out[u, b] = maxsim_score(q, d).score
            else:
                out[u, b] = single_vector_score(q, d)
    return out
