"""Contrastive training of the two encoders with in-batch negatives.

Two loss modes exist:

* "standard": mean over the batch of -log softmax with the positive pair
  included in the denominator (the usual InfoNCE form). This is the
  training default.
* "verbatim": a single -log over the sum of per-sample ratios whose
  denominators exclude the positive pair. Kept for fidelity/comparison;
  its value can be negative.

Gradients are analytic throughout. The max inside the relevance score is
handled with a subgradient: all gradient flows to the argmax document
token, ties resolving to the lowest row index (matching the scorer's
attribution tie-break).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .core import CoreConfig
from .corpus import CorpusItem, item_from_json_obj
from .encoder import EncoderParams, EncodeTrace, encode_with_trace
from .errors import (
    BatchTooSmallError,
    InsufficientDataError,
    NonFiniteError,
)
from .scoring import MAXSIM, SCORE_MODES, SINGLE

STANDARD = "standard"
VERBATIM = "verbatim"
LOSS_MODES = (STANDARD, VERBATIM)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    tau: float = 1.0
    lr: float = 1e-4
    epochs: int = 1
    loss_mode: str = STANDARD
    score_mode: str = MAXSIM
    seed: int = 0
    tie_encoders: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}, got {self.score_mode!r}")
        min_b = 2 if self.loss_mode == VERBATIM else 1
        if self.batch_size < min_b:
            raise ValueError(f"batch_size must be >= {min_b} for {self.loss_mode} loss")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class TrainPair:
    query: CorpusItem
    document: CorpusItem


def pairs_from_qrels(queries, documents, qrels) -> list[TrainPair]:
    """One TrainPair per (query, relevant doc) edge, in query order."""
    docs_by_id = {d.id: d for d in documents}
    pairs = []
    for q in queries:
        for doc_id in sorted(qrels.get(q.id, ())):
            pairs.append(TrainPair(query=q, document=docs_by_id[doc_id]))
    return pairs


def save_pairs(pairs, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(
                json.dumps({"query": p.query.to_json_obj(), "document": p.document.to_json_obj()})
                + "\n"
            )


def load_pairs(path) -> list[TrainPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            pairs.append(
                TrainPair(
                    query=item_from_json_obj(obj["query"], line_no),
                    document=item_from_json_obj(obj["document"], line_no),
                )
            )
    return pairs


# --- loss and its gradient ---------------------------------------------------


def _check_score_matrix(S: np.ndarray, mode: str) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"score matrix must be square, got shape {S.shape}")
    if not np.isfinite(S).all():
        raise NonFiniteError("score matrix contains NaN/Inf")
    if mode not in LOSS_MODES:
        raise ValueError(f"mode must be one of {LOSS_MODES}, got {mode!r}")
    if mode == VERBATIM and S.shape[0] < 2:
        raise BatchTooSmallError("verbatim loss needs B >= 2 (the indicator empties the denominator)")
    return S


def _logsumexp_rows(Z: np.ndarray) -> np.ndarray:
    m = np.max(Z, axis=1)
    return m + np.log(np.exp(Z - m[:, None]).sum(axis=1))


def contrastive_loss(S: np.ndarray, tau: float, mode: str = STANDARD) -> float:
    """In-batch contrastive loss over a B x B score matrix.

    standard: (1/B) sum_u [ logsumexp_b(S_ub/tau) - S_uu/tau ]
    verbatim: -log sum_u exp( S_uu/tau - logsumexp_{b != u}(S_ub/tau) )
    """
    S = _check_score_matrix(S, mode)
    Z = S / tau
    if mode == STANDARD:
        return float(np.mean(_logsumexp_rows(Z) - np.diag(Z)))
    # verbatim: exclude the diagonal from each row's denominator
    Z_off = Z.copy()
    np.fill_diagonal(Z_off, -np.inf)
    r = np.diag(Z) - _logsumexp_rows(Z_off)  # log of each per-sample ratio
    m = np.max(r)
    return float(-(m + np.log(np.exp(r - m).sum())))


def loss_gradient(S: np.ndarray, tau: float, mode: str = STANDARD) -> np.ndarray:
    """d loss / d S, closed form; every row sums to zero in both modes."""
    S = _check_score_matrix(S, mode)
    B = S.shape[0]
    Z = S / tau
    if mode == STANDARD:
        P = np.exp(Z - _logsumexp_rows(Z)[:, None])  # row softmax
        G = P.copy()
        G[np.diag_indices(B)] -= 1.0
        return G / (B * tau)
    Z_off = Z.copy()
    np.fill_diagonal(Z_off, -np.inf)
    lse_off = _logsumexp_rows(Z_off)
    r = np.diag(Z) - lse_off
    w = np.exp(r - np.max(r))
    w /= w.sum()  # softmax over samples of the log-ratios
    P_off = np.exp(Z_off - lse_off[:, None])  # row softmax excluding the diagonal
    G = w[:, None] * P_off
    G[np.diag_indices(B)] = -w
    return G / tau


# --- optimizer ---------------------------------------------------------------


class Adam:
    """Plain Adam; one shared step counter, per-array first/second moments."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            p = params[name]
            if name not in self._m:
                self._m[name] = np.zeros_like(p)
                self._v[name] = np.zeros_like(p)
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


# --- epoch loop --------------------------------------------------------------


@dataclass
class EpochStats:
    epoch: int
    batch_losses: list[float]
    wall_ms: list[float]

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.batch_losses))

    def to_records(self) -> list[dict]:
        """Line-delimited record form: epoch, batch, loss, wall-time ms."""
        return [
            {"epoch": self.epoch, "batch": i, "loss": loss, "wall_ms": ms}
            for i, (loss, ms) in enumerate(zip(self.batch_losses, self.wall_ms))
        ]


def _grad_through_normalization(trace: EncodeTrace, d_normed: np.ndarray) -> np.ndarray:
    """Backprop y = x / ||x|| row-wise: dx = (dy - y (y . dy)) / ||x||."""
    y = trace.encoded.matrix.rows[: d_normed.shape[0]]  # real rows are the prefix
    dots = np.sum(y * d_normed, axis=1, keepdims=True)
    return (d_normed - y * dots) / trace.norms[:, None]


class _ParamSlot:
    """Mutable parameter arrays plus reusable gradient buffers for one side."""

    def __init__(self, params: EncoderParams):
        self.embed = params.embed_table.copy()
        self.proj = params.projection.copy()
        self.vproj = params.visual_projection.copy()
        self.role = params.role
        self.g_embed = np.zeros_like(self.embed)
        self.g_proj = np.zeros_like(self.proj)
        self.g_vproj = np.zeros_like(self.vproj)

    def zero_grads(self):
        self.g_embed.fill(0.0)
        self.g_proj.fill(0.0)
        self.g_vproj.fill(0.0)

    def as_params(self) -> EncoderParams:
        return EncoderParams(
            embed_table=self.embed, projection=self.proj,
            visual_projection=self.vproj, role=self.role,
        )

    def accumulate(self, trace: EncodeTrace, d_pre: np.ndarray) -> None:
        """Scatter the pre-normalization row gradient into the weight grads."""
        n_t = trace.n_text
        if n_t:
            d_text = d_pre[:n_t]
            emb_rows = self.embed[trace.token_ids]
            self.g_proj += emb_rows.T @ d_text
            d_emb_rows = d_text @ self.proj.T
            np.add.at(self.g_embed, trace.token_ids, d_emb_rows)
        if trace.n_visual:
            d_vis = d_pre[n_t:]
            self.g_vproj += trace.visual_in.T @ d_vis


class Trainer:
    """Owns mutable copies of both parameter sets plus persistent Adam state.

    Deterministic given the seeds: the epoch shuffle derives from
    cfg.seed + epoch index, and all numerics are plain float64 numpy.
    """

    def __init__(
        self,
        params_q: EncoderParams,
        params_d: EncoderParams,
        cfg: TrainConfig,
        core_cfg: CoreConfig,
    ):
        self.cfg = cfg
        self.core_cfg = core_cfg
        self._q = _ParamSlot(params_q)
        self._d = self._q if cfg.tie_encoders else _ParamSlot(params_d)
        self._opt = Adam(lr=cfg.lr)

    @property
    def params_q(self) -> EncoderParams:
        return self._q.as_params()

    @property
    def params_d(self) -> EncoderParams:
        return self._d.as_params()

    def train(self, pairs) -> list[EpochStats]:
        return [self.train_epoch(pairs, epoch) for epoch in range(self.cfg.epochs)]

    def train_epoch(self, pairs, epoch: int = 0) -> EpochStats:
        B = self.cfg.batch_size
        if len(pairs) < B:
            raise InsufficientDataError(f"{len(pairs)} pairs < batch size {B}")
        order = np.random.default_rng(self.cfg.seed + epoch).permutation(len(pairs))
        n_batches = len(pairs) // B  # trailing partial batch dropped
        losses: list[float] = []
        walls: list[float] = []
        for bi in range(n_batches):
            t0 = time.perf_counter()
            batch = [pairs[i] for i in order[bi * B : (bi + 1) * B]]
            losses.append(self._step(batch))
            walls.append((time.perf_counter() - t0) * 1e3)
        return EpochStats(epoch=epoch, batch_losses=losses, wall_ms=walls)

    def loss_and_gradients(self, batch) -> tuple[float, dict[str, np.ndarray]]:
        """Loss plus copies of the full-chain parameter gradients (no update)."""
        loss = self._forward_backward(batch)
        grads = {
            "q.embed": self._q.g_embed.copy(),
            "q.proj": self._q.g_proj.copy(),
            "q.vproj": self._q.g_vproj.copy(),
        }
        if not self.cfg.tie_encoders:
            grads.update(
                {
                    "d.embed": self._d.g_embed.copy(),
                    "d.proj": self._d.g_proj.copy(),
                    "d.vproj": self._d.g_vproj.copy(),
                }
            )
        return loss, grads

    def _forward_backward(self, batch) -> float:
        cfg = self.cfg
        q_traces = [encode_with_trace(p.query, self._q.as_params(), self.core_cfg) for p in batch]
        d_traces = [encode_with_trace(p.document, self._d.as_params(), self.core_cfg) for p in batch]
        B = len(batch)

        # Score matrix and the argmax bookkeeping the subgradient needs.
        q_rows = [t.encoded.matrix.true_rows() for t in q_traces]
        d_rows = [t.encoded.matrix.true_rows() for t in d_traces]
        S = np.empty((B, B), dtype=np.float64)
        best: list[list[np.ndarray | None]] = [[None] * B for _ in range(B)]
        for u in range(B):
            for b in range(B):
                if cfg.score_mode == MAXSIM:
                    sims = q_rows[u] @ d_rows[b].T
                    j = np.argmax(sims, axis=1)
                    best[u][b] = j
                    S[u, b] = sims[np.arange(len(j)), j].sum()
                else:
                    S[u, b] = q_rows[u][0] @ d_rows[b][0]

        loss = contrastive_loss(S, cfg.tau, cfg.loss_mode)
        G = loss_gradient(S, cfg.tau, cfg.loss_mode)

        # Gradient w.r.t. the normalized real rows of every item.
        dq = [np.zeros_like(r) for r in q_rows]
        dd = [np.zeros_like(r) for r in d_rows]
        for u in range(B):
            for b in range(B):
                g = G[u, b]
                if g == 0.0:
                    continue
                if cfg.score_mode == MAXSIM:
                    j = best[u][b]
                    dq[u] += g * d_rows[b][j]
                    np.add.at(dd[b], j, g * q_rows[u])
                else:
                    dq[u][0] += g * d_rows[b][0]
                    dd[b][0] += g * q_rows[u][0]

        self._q.zero_grads()
        if not cfg.tie_encoders:
            self._d.zero_grads()
        for trace, d_normed, slot in (
            *((q_traces[i], dq[i], self._q) for i in range(B)),
            *((d_traces[i], dd[i], self._d) for i in range(B)),
        ):
            slot.accumulate(trace, _grad_through_normalization(trace, d_normed))
        return loss

    def _step(self, batch) -> float:
        cfg = self.cfg
        loss = self._forward_backward(batch)
        if cfg.tie_encoders:
            self._opt.step(
                {"embed": self._q.embed, "proj": self._q.proj, "vproj": self._q.vproj},
                {"embed": self._q.g_embed, "proj": self._q.g_proj, "vproj": self._q.g_vproj},
            )
        else:
            self._opt.step(
                {
                    "q.embed": self._q.embed, "q.proj": self._q.proj, "q.vproj": self._q.vproj,
                    "d.embed": self._d.embed, "d.proj": self._d.proj, "d.vproj": self._d.vproj,
                },
                {
                    "q.embed": self._q.g_embed, "q.proj": self._q.g_proj, "q.vproj": self._q.g_vproj,
                    "d.embed": self._d.g_embed, "d.proj": self._d.g_proj, "d.vproj": self._d.g_vproj,
                },
            )
        return loss


def train_epoch(
    pairs,
    params_q: EncoderParams,
    params_d: EncoderParams,
    cfg: TrainConfig,
    core_cfg: CoreConfig,
    epoch: int = 0,
) -> tuple[EncoderParams, EncoderParams, EpochStats]:
    """Single-epoch convenience wrapper (fresh optimizer state).

    Multi-epoch runs should use Trainer so Adam moments persist across epochs.
    """
    trainer = Trainer(params_q, params_d, cfg, core_cfg)
    stats = trainer.train_epoch(pairs, epoch)
    return trainer.params_q, trainer.params_d, stats
