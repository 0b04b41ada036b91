"""Token-level embedding primitives: the TokenMatrix container, row-wise
L2 normalization, and fixed-length padding with validity masks.

A TokenMatrix is the common currency of the package: an M x D matrix of
token embeddings where only the masked-true rows are real tokens. Padding
rows are all-zero and never participate in scoring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySequenceError, TooLongError, ZeroRowError

ZERO_NORM_EPS = 1e-12


@dataclass(frozen=True)
class CoreConfig:
    """Shared numeric configuration.

    dim: embedding dimension of every token row (desk-scale default 64).
    pad_len: fixed row count every encoded item is padded to.
    seed: base seed for any randomized component downstream.
    """

    dim: int = 64
    pad_len: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.pad_len < 1:
            raise ValueError(f"pad_len must be >= 1, got {self.pad_len}")


@dataclass(frozen=True)
class TokenMatrix:
    """Immutable M x D embedding matrix plus a length-M validity mask.

    mask[i] is True for real token rows, False for padding. Padding rows
    are all-zero. Arrays are frozen (read-only) so instances can be shared
    freely across threads.
    """

    rows: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.float64))
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
        mask = self.mask
        if mask is None:
            mask = np.ones(rows.shape[0], dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (rows.shape[0],):
            raise ValueError(
                f"mask shape {mask.shape} does not match {rows.shape[0]} rows"
            )
        if not mask.any():
            raise EmptySequenceError("TokenMatrix needs at least one real token row")
        if rows[~mask].any():
            raise ValueError("padding (masked-false) rows must be all-zero")
        rows.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "mask", mask)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def pad_len(self) -> int:
        return self.rows.shape[0]

    @property
    def n_true(self) -> int:
        """Number of real (masked-true) token rows."""
        return int(self.mask.sum())

    def true_rows(self) -> np.ndarray:
        """The real token rows, in matrix order."""
        return self.rows[self.mask]


def l2_normalize_rows(m: np.ndarray, mask: np.ndarray) -> TokenMatrix:
    """Divide every masked-true row by its Euclidean norm; zero the rest.

    Raises ZeroRowError if any masked-true row has norm <= 1e-12, since a
    direction cannot be recovered from a zero vector.
    """
    m = np.asarray(m, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"expected 2-D matrix, got shape {m.shape}")
    if mask.shape != (m.shape[0],):
        raise ValueError(f"mask shape {mask.shape} does not match {m.shape[0]} rows")
    norms = np.linalg.norm(m, axis=1)
    bad = mask & (norms <= ZERO_NORM_EPS)
    if bad.any():
        raise ZeroRowError(
            f"rows {np.flatnonzero(bad).tolist()} are masked-true but have norm <= {ZERO_NORM_EPS}"
        )
    out = np.zeros_like(m)
    out[mask] = m[mask] / norms[mask, None]
    return TokenMatrix(rows=out, mask=mask)


def pad_and_mask(tokens, pad_len: int) -> TokenMatrix:
    """Stack a sequence of D-vectors into a pad_len x D matrix with a prefix mask.

    The first len(tokens) rows hold the inputs, the remainder is zero, and
    the mask is True exactly on the real rows. Raises EmptySequenceError on
    an empty sequence and TooLongError when the sequence exceeds pad_len.
    """
    arr = np.asarray(tokens, dtype=np.float64)
    if arr.ndim != 2:
        if arr.size == 0:
            raise EmptySequenceError("cannot pad an empty token sequence")
        raise ValueError(f"tokens must be a sequence of equal-length vectors, got shape {arr.shape}")
    n = arr.shape[0]
    if n == 0:
        raise EmptySequenceError("cannot pad an empty token sequence")
    if n > pad_len:
        raise TooLongError(f"{n} tokens exceed pad_len {pad_len}")
    rows = np.zeros((pad_len, arr.shape[1]), dtype=np.float64)
    rows[:n] = arr
    mask = np.zeros(pad_len, dtype=bool)
    mask[:n] = True
    return TokenMatrix(rows=rows, mask=mask)


def strip_padding(tm: TokenMatrix) -> np.ndarray:
    """Inverse of pad_and_mask for prefix-masked matrices: the real rows."""
    return tm.true_rows()
