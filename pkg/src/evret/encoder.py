"""Trainable stand-in encoder: hashing tokenizer -> embedding lookup ->
linear projection -> row L2 normalization.

Text tokens and (already vectorized) visual content are concatenated into
one unified sequence, text rows first, then padded to the configured
length and row-normalized. Query side and document side are independent
parameter sets.

Checkpoint file layout (little-endian):
    magic "OFAREnc1" (8 bytes), u32 version=1,
    u32 vocab_size, u32 H, u32 D, u32 D_v,
    then row-major f32: embed_table (vocab_size x H),
    projection (H x D), visual_projection (D_v x D).
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CoreConfig, TokenMatrix, l2_normalize_rows, pad_and_mask
from .corpus import CorpusItem
from .errors import (
    BadMagicError,
    CorruptLengthError,
    DimMismatchError,
    EmptyItemError,
    VersionMismatchError,
)

DEFAULT_VOCAB_SIZE = 65536
CHECKPOINT_MAGIC = b"OFAREnc1"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sIIIII")

_WORD_RE = re.compile(r"[a-z0-9]+")

ROLES = ("query", "document")


def tokenize(text: str, vocab_size: int = DEFAULT_VOCAB_SIZE) -> np.ndarray:
    """Map text to stable hash-bucket ids.

    Lowercases, splits on anything that is not a letter or digit, and hashes
    each word with blake2b so the ids are identical across runs, processes,
    and platforms. Empty text yields an empty id array.
    """
    words = _WORD_RE.findall(text.lower())
    ids = np.empty(len(words), dtype=np.int64)
    for i, w in enumerate(words):
        digest = hashlib.blake2b(w.encode("utf-8"), digest_size=8).digest()
        ids[i] = int.from_bytes(digest, "little") % vocab_size
    return ids


@dataclass(frozen=True)
class EncoderParams:
    """One side's trainable weights (query or document)."""

    embed_table: np.ndarray        # (vocab_size, H)
    projection: np.ndarray         # (H, D)
    visual_projection: np.ndarray  # (D_v, D); D_v may be 0
    role: str = "document"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.embed_table.shape[1] != self.projection.shape[0]:
            raise ValueError("embed_table H does not match projection H")
        if self.visual_projection.shape[1] != self.projection.shape[1]:
            raise ValueError("visual_projection output dim does not match projection D")
        for name in ("embed_table", "projection", "visual_projection"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def vocab_size(self) -> int:
        return self.embed_table.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.embed_table.shape[1]

    @property
    def dim(self) -> int:
        return self.projection.shape[1]

    @property
    def visual_dim(self) -> int:
        return self.visual_projection.shape[0]

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            embed_table=self.embed_table.copy(),
            projection=self.projection.copy(),
            visual_projection=self.visual_projection.copy(),
            role=self.role,
        )


def init_encoder_params(
    role: str,
    seed: int,
    dim: int = 64,
    hidden_dim: int = 64,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    visual_dim: int = 0,
) -> EncoderParams:
    """Seeded random initialization; scales keep projected rows O(1) in norm."""
    rng = np.random.default_rng(seed)
    embed = rng.standard_normal((vocab_size, hidden_dim)) / np.sqrt(hidden_dim)
    proj = rng.standard_normal((hidden_dim, dim)) / np.sqrt(hidden_dim)
    vproj = rng.standard_normal((visual_dim, dim))
    if visual_dim > 0:
        vproj /= np.sqrt(visual_dim)
    return EncoderParams(
        embed_table=embed, projection=proj, visual_projection=vproj, role=role
    )


@dataclass(frozen=True)
class ModalitySpan:
    """Half-open row range [start, stop) of one modality inside the matrix."""

    modality: str  # "text" | "visual"
    start: int
    stop: int


@dataclass(frozen=True)
class EncodedItem:
    matrix: TokenMatrix
    source_id: str
    spans: tuple[ModalitySpan, ...]


@dataclass
class EncodeTrace:
    """Forward-pass intermediates retained for backpropagation."""

    token_ids: np.ndarray   # (n_text,)
    pre_norm: np.ndarray    # (n_real, D) rows before L2 normalization
    norms: np.ndarray       # (n_real,)
    n_text: int
    n_visual: int
    visual_in: np.ndarray | None  # (n_visual, D_v) raw visual vectors
    encoded: EncodedItem


def encode_with_trace(item: CorpusItem, params: EncoderParams, cfg: CoreConfig) -> EncodeTrace:
    """encode() plus the intermediates the trainer needs."""
    if params.dim != cfg.dim:
        raise DimMismatchError(f"params dim {params.dim} != config dim {cfg.dim}")

    pieces = []
    token_ids = tokenize(item.text, params.vocab_size) if item.has_text else np.empty(0, dtype=np.int64)
    if len(token_ids) > 0:
        pieces.append(params.embed_table[token_ids] @ params.projection)
    visual_in = None
    if item.has_visual:
        visual_in = np.asarray(item.visual_vecs, dtype=np.float64)
        if visual_in.shape[1] != params.visual_dim:
            raise DimMismatchError(
                f"visual vectors have dim {visual_in.shape[1]}, encoder expects {params.visual_dim}"
            )
        pieces.append(visual_in @ params.visual_projection)
    if not pieces:
        raise EmptyItemError(f"item {item.id!r} produced no token rows")

    unified = np.vstack(pieces)
    n_text = len(token_ids)
    n_visual = unified.shape[0] - n_text

    padded = pad_and_mask(unified, cfg.pad_len)
    norms = np.linalg.norm(unified, axis=1)
    matrix = l2_normalize_rows(padded.rows, padded.mask)

    spans = []
    if n_text:
        spans.append(ModalitySpan("text", 0, n_text))
    if n_visual:
        spans.append(ModalitySpan("visual", n_text, n_text + n_visual))
    encoded = EncodedItem(matrix=matrix, source_id=item.id, spans=tuple(spans))
    return EncodeTrace(
        token_ids=token_ids,
        pre_norm=unified,
        norms=norms,
        n_text=n_text,
        n_visual=n_visual,
        visual_in=visual_in,
        encoded=encoded,
    )


def encode(item: CorpusItem, params: EncoderParams, cfg: CoreConfig) -> EncodedItem:
    """Encode one corpus item into a normalized, padded TokenMatrix."""
    return encode_with_trace(item, params, cfg).encoded


def save_encoder_params(params: EncoderParams, path) -> None:
    """Write the checkpoint format documented in the module docstring."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(
                CHECKPOINT_MAGIC,
                CHECKPOINT_VERSION,
                params.vocab_size,
                params.hidden_dim,
                params.dim,
                params.visual_dim,
            )
        )
        for arr in (params.embed_table, params.projection, params.visual_projection):
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_encoder_params(path, role: str = "document") -> EncoderParams:
    """Read a checkpoint; values come back as float64 (quantized through f32)."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise CorruptLengthError(f"file too short for header: {len(data)} bytes")
    magic, version, vocab_size, hidden, dim, visual_dim = _HEADER.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"unsupported checkpoint version {version}")
    counts = (vocab_size * hidden, hidden * dim, visual_dim * dim)
    expected = _HEADER.size + 4 * sum(counts)
    if len(data) != expected:
        raise CorruptLengthError(f"expected {expected} bytes, file has {len(data)}")
    offset = _HEADER.size
    arrays = []
    for count in counts:
        arrays.append(
            np.frombuffer(data, dtype="<f4", count=count, offset=offset).astype(np.float64)
        )
        offset += 4 * count
    return EncoderParams(
        embed_table=arrays[0].reshape(vocab_size, hidden),
        projection=arrays[1].reshape(hidden, dim),
        visual_projection=arrays[2].reshape(visual_dim, dim),
        role=role,
    )
