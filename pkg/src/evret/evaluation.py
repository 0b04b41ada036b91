"""Retrieval metrics and the benchmark protocol: MRR@10 / R@10 / R@50,
modality ablations (All / Vision / Text), and the three model variants
(full, no_maxsim, fix_encoder).

Modality ablation is applied symmetrically: both queries and documents are
filtered and re-encoded, and the report records that choice. A query (or
document) emptied by the filter is skipped (dropped from the index) rather
than scored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CoreConfig
from .corpus import CorpusItem
from .encoder import EncoderParams, encode, init_encoder_params
from .errors import (
    DuplicateInRankingError,
    EmptyRelevantError,
    MissingArtifactsError,
)
from .index import build_index, search_exact

Qrels = dict[str, set[str]]

MODALITY_MODES = ("All", "Vision", "Text")
VARIANTS = ("full", "no_maxsim", "fix_encoder")
ABLATION_SCOPE = "queries+documents"


def load_qrels(path) -> Qrels:
    """Read tab-separated `query_id<TAB>doc_id` lines."""
    qrels: Qrels = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"qrels line {line_no}: expected 'query_id<TAB>doc_id', got {line!r}")
            qrels.setdefault(parts[0], set()).add(parts[1])
    return qrels


def save_qrels(qrels: Qrels, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as f:
        for qid in sorted(qrels):
            for doc_id in sorted(qrels[qid]):
                f.write(f"{qid}\t{doc_id}\n")


def mrr_at_k(ranking, relevant, k: int) -> float:
    """1/rank of the first relevant doc within the top k, else 0."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranking = list(ranking)
    if len(set(ranking)) != len(ranking):
        raise DuplicateInRankingError("ranking contains a repeated doc id")
    for rank, doc_id in enumerate(ranking[:k], start=1):
        if doc_id in relevant:
            return 1.0 / rank
    return 0.0


def recall_at_k(ranking, relevant, k: int) -> float:
    """|relevant ∩ top-k| / |relevant|."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not relevant:
        raise EmptyRelevantError("recall is undefined for an empty relevant set")
    ranking = list(ranking)
    if len(set(ranking)) != len(ranking):
        raise DuplicateInRankingError("ranking contains a repeated doc id")
    return len(set(ranking[:k]) & set(relevant)) / len(relevant)


def apply_modality_filter(item: CorpusItem, mode: str) -> CorpusItem | None:
    """Strip the ablated modality; None means the item was emptied (Skipped)."""
    if mode not in MODALITY_MODES:
        raise ValueError(f"mode must be one of {MODALITY_MODES}, got {mode!r}")
    if mode == "All":
        return item
    if mode == "Text":
        if not item.has_text:
            return None
        return CorpusItem(id=item.id, text=item.text, visual_vecs=None, kind=item.kind)
    # Vision
    if not item.has_visual:
        return None
    return CorpusItem(id=item.id, text=None, visual_vecs=item.visual_vecs, kind=item.kind)


@dataclass
class MetricsReport:
    variant: str
    modality: str
    mrr_at_10: float
    r_at_10: float
    r_at_50: float
    per_query: dict[str, dict] = field(default_factory=dict)
    n_evaluated: int = 0
    n_skipped: int = 0
    ablation_scope: str = ABLATION_SCOPE

    def format_table(self) -> str:
        lines = [
            f"variant: {self.variant}   modality: {self.modality}   "
            f"ablation: {self.ablation_scope}",
            f"queries evaluated: {self.n_evaluated}   skipped: {self.n_skipped}",
            "metric     value",
            "---------  ------",
            f"MRR@10     {self.mrr_at_10:.4f}",
            f"R@10       {self.r_at_10:.4f}",
            f"R@50       {self.r_at_50:.4f}",
        ]
        return "\n".join(lines)

    def to_records(self) -> list[str]:
        """Machine-readable key=value lines, one per metric plus one per query."""
        head = f"variant={self.variant} modality={self.modality} ablation={self.ablation_scope}"
        recs = [
            f"{head} metric=mrr_at_10 value={self.mrr_at_10:.6f}",
            f"{head} metric=r_at_10 value={self.r_at_10:.6f}",
            f"{head} metric=r_at_50 value={self.r_at_50:.6f}",
        ]
        for qid in sorted(self.per_query):
            m = self.per_query[qid]
            recs.append(
                f"{head} query={qid} mrr_at_10={m['mrr_at_10']:.6f} "
                f"r_at_10={m['r_at_10']:.6f} r_at_50={m['r_at_50']:.6f}"
            )
        return recs


def _rank_single_vector(index, q_matrix, k: int) -> list[str]:
    """Rank by the first-real-row inner product, ties by ascending doc_id."""
    q_first = q_matrix.rows[np.flatnonzero(q_matrix.mask)[0]]
    scores = index.first_token_rows() @ q_first
    ids = np.asarray(index.doc_ids)
    order = np.lexsort((ids, -scores))[:k]
    return [index.doc_ids[i] for i in order]


def run_eval(
    documents,
    queries,
    qrels: Qrels,
    params_q: EncoderParams | None,
    params_d: EncoderParams | None,
    core_cfg: CoreConfig,
    variant: str = "full",
    modality: str = "All",
    depth: int = 50,
) -> MetricsReport:
    """Encode, index, rank, and aggregate metrics for one configuration.

    full        trained encoders, late-interaction ranking
    no_maxsim   trained encoders, first-token (summary vector) ranking
    fix_encoder untrained encoders seeded from core_cfg.seed, late-interaction

    Only queries present in qrels are evaluated; queries emptied by the
    modality filter count as skipped. Metrics are unweighted means over the
    evaluated queries.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if params_q is None or params_d is None:
        raise MissingArtifactsError("run_eval needs both encoder parameter sets")

    if variant == "fix_encoder":
        params_q = init_encoder_params(
            role="query", seed=core_cfg.seed, dim=params_q.dim,
            hidden_dim=params_q.hidden_dim, vocab_size=params_q.vocab_size,
            visual_dim=params_q.visual_dim,
        )
        params_d = init_encoder_params(
            role="document", seed=core_cfg.seed + 1, dim=params_d.dim,
            hidden_dim=params_d.hidden_dim, vocab_size=params_d.vocab_size,
            visual_dim=params_d.visual_dim,
        )

    kept_docs = []
    for doc in documents:
        filtered = apply_modality_filter(doc, modality)
        if filtered is not None:
            kept_docs.append(filtered)
    if not kept_docs:
        raise MissingArtifactsError(f"no documents survive the {modality} filter")
    index = build_index([encode(d, params_d, core_cfg) for d in kept_docs])

    per_query: dict[str, dict] = {}
    n_skipped = 0
    for query in queries:
        if query.id not in qrels:
            continue
        filtered = apply_modality_filter(query, modality)
        if filtered is None:
            n_skipped += 1
            continue
        q_matrix = encode(filtered, params_q, core_cfg).matrix
        if variant == "no_maxsim":
            ranking = _rank_single_vector(index, q_matrix, depth)
        else:
            ranking = [h.doc_id for h in search_exact(index, q_matrix, depth).entries]
        relevant = qrels[query.id]
        per_query[query.id] = {
            "mrr_at_10": mrr_at_k(ranking, relevant, 10),
            "r_at_10": recall_at_k(ranking, relevant, 10),
            "r_at_50": recall_at_k(ranking, relevant, 50),
        }

    n = len(per_query)
    if n == 0:
        raise MissingArtifactsError("no queries were evaluable (all skipped or missing qrels)")
    return MetricsReport(
        variant=variant,
        modality=modality,
        mrr_at_10=float(np.mean([m["mrr_at_10"] for m in per_query.values()])),
        r_at_10=float(np.mean([m["r_at_10"] for m in per_query.values()])),
        r_at_50=float(np.mean([m["r_at_50"] for m in per_query.values()])),
        per_query=per_query,
        n_evaluated=n,
        n_skipped=n_skipped,
    )
