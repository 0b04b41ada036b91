"""Corpus items, JSONL ingestion, and the synthetic benchmark generator.

Corpus files are JSON lines, one item per line:

    {"id": "d1", "text": "endangered turtle sale", "kind": "document"}
    {"id": "d2", "text": "...", "visual_vecs": [[0.1, ...], ...], "kind": "query"}

Visual content enters the system only as precomputed vectors; there is no
image processing anywhere in the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorpusParseError, DuplicateIdError, MissingModalitiesError

KINDS = ("query", "document")


@dataclass(frozen=True)
class CorpusItem:
    """One query or document: free text and/or precomputed visual vectors."""

    id: str
    text: str | None = None
    visual_vecs: np.ndarray | None = None  # (n_vecs, visual_dim)
    kind: str = "document"

    def __post_init__(self):
        if not self.id:
            raise ValueError("item id must be non-empty")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        vv = self.visual_vecs
        if vv is not None:
            vv = np.asarray(vv, dtype=np.float64)
            if vv.ndim != 2 or vv.shape[0] == 0:
                raise ValueError(f"visual_vecs must be a non-empty 2-D array, got shape {vv.shape}")
            vv.setflags(write=False)
            object.__setattr__(self, "visual_vecs", vv)
        if not self.has_text and not self.has_visual:
            raise MissingModalitiesError(self.id)

    @property
    def has_text(self) -> bool:
        return bool(self.text)

    @property
    def has_visual(self) -> bool:
        return self.visual_vecs is not None

    def to_json_obj(self) -> dict:
        obj: dict = {"id": self.id, "kind": self.kind}
        if self.text is not None:
            obj["text"] = self.text
        if self.visual_vecs is not None:
            obj["visual_vecs"] = self.visual_vecs.tolist()
        return obj


def item_from_json_obj(obj: dict, line_no: int = 0) -> CorpusItem:
    if not isinstance(obj, dict):
        raise CorpusParseError(line_no, f"expected a JSON object, got {type(obj).__name__}")
    item_id = obj.get("id")
    if not isinstance(item_id, str) or not item_id:
        raise CorpusParseError(line_no, "missing or empty 'id'")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise CorpusParseError(line_no, f"'kind' must be one of {KINDS}, got {kind!r}")
    text = obj.get("text")
    if text is not None and not isinstance(text, str):
        raise CorpusParseError(line_no, "'text' must be a string")
    vv = obj.get("visual_vecs")
    if vv is not None:
        try:
            vv = np.asarray(vv, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise CorpusParseError(line_no, f"bad visual_vecs: {e}") from e
        if vv.ndim != 2 or vv.shape[0] == 0:
            raise CorpusParseError(line_no, f"visual_vecs must be a non-empty 2-D array, got shape {vv.shape}")
    if not text and vv is None:
        raise MissingModalitiesError(item_id)
    return CorpusItem(id=item_id, text=text, visual_vecs=vv, kind=kind)


def load_corpus(path) -> list[CorpusItem]:
    """Read a JSONL corpus file, validating schema and id uniqueness."""
    items: list[CorpusItem] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusParseError(line_no, f"invalid JSON: {e.msg}") from e
            item = item_from_json_obj(obj, line_no)
            if item.id in seen:
                raise DuplicateIdError(f"duplicate id {item.id!r} at line {line_no}")
            seen.add(item.id)
            items.append(item)
    return items


def save_corpus(items, path) -> None:
    """Write items as one JSON object per line (inverse of load_corpus)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item.to_json_obj()) + "\n")


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic topic-model benchmark.

    Each topic owns a disjoint slice of the vocabulary. Every document draws
    its tokens from one topic's slice; every query re-samples tokens from its
    source document, with each token independently replaced by a uniform
    random vocabulary word with probability noise_rate. Optional visual
    vectors follow the same pattern: documents perturb a topic prototype,
    queries perturb their source document's vectors.
    """

    n_topics: int = 10
    n_docs: int = 100
    n_queries: int = 20
    tokens_per_item: int = 12
    vocab: int = 2000
    noise_rate: float = 0.2
    seed: int = 0
    visual_dim: int = 0      # 0 disables the visual modality
    visual_per_item: int = 0

    def __post_init__(self):
        for name in ("n_topics", "n_docs", "n_queries", "tokens_per_item", "vocab"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError(f"noise_rate must be in [0, 1], got {self.noise_rate}")
        if self.vocab < self.n_topics:
            raise ValueError("vocab must be >= n_topics so every topic owns at least one word")
        if (self.visual_dim > 0) != (self.visual_per_item > 0):
            raise ValueError("visual_dim and visual_per_item must be set together")


def _word(i: int) -> str:
    return f"w{i:05d}"


def generate_synthetic(spec: SynthSpec):
    """Build (documents, queries, qrels) deterministically from spec.seed.

    qrels maps each query id to the singleton set holding its source
    document's id.
    """
    rng = np.random.default_rng(spec.seed)
    slice_size = spec.vocab // spec.n_topics
    with_visual = spec.visual_dim > 0

    if with_visual:
        protos = rng.standard_normal((spec.n_topics, spec.visual_dim))
        protos /= np.linalg.norm(protos, axis=1, keepdims=True)

    documents: list[CorpusItem] = []
    doc_token_ids: list[np.ndarray] = []
    doc_visuals: list[np.ndarray | None] = []
    for i in range(spec.n_docs):
        topic = i % spec.n_topics
        lo = topic * slice_size
        ids = rng.integers(lo, lo + slice_size, size=spec.tokens_per_item)
        doc_token_ids.append(ids)
        vv = None
        if with_visual:
            noise = rng.standard_normal((spec.visual_per_item, spec.visual_dim))
            vv = protos[topic] + 0.5 * noise / np.sqrt(spec.visual_dim)
            vv /= np.linalg.norm(vv, axis=1, keepdims=True)
        doc_visuals.append(vv)
        documents.append(
            CorpusItem(
                id=f"d{i:05d}",
                text=" ".join(_word(t) for t in ids),
                visual_vecs=vv,
                kind="document",
            )
        )

    queries: list[CorpusItem] = []
    qrels: dict[str, set[str]] = {}
    for j in range(spec.n_queries):
        src = int(rng.integers(0, spec.n_docs))
        ids = rng.choice(doc_token_ids[src], size=spec.tokens_per_item, replace=True)
        flip = rng.random(spec.tokens_per_item) < spec.noise_rate
        ids[flip] = rng.integers(0, spec.vocab, size=int(flip.sum()))
        vv = None
        if with_visual:
            base = doc_visuals[src]
            noise = rng.standard_normal(base.shape)
            vv = base + (0.2 + spec.noise_rate) * noise / np.sqrt(spec.visual_dim)
            vv /= np.linalg.norm(vv, axis=1, keepdims=True)
        qid = f"q{j:05d}"
        queries.append(
            CorpusItem(
                id=qid,
                text=" ".join(_word(t) for t in ids),
                visual_vecs=vv,
                kind="query",
            )
        )
        qrels[qid] = {documents[src].id}

    return documents, queries, qrels
