import numpy as np
import pytest

from evret.core import TokenMatrix, l2_normalize_rows


def random_token_matrix(
    rng: np.random.Generator,
    m_max: int = 16,
    dim: int = 8,
    prefix_mask: bool = False,
) -> TokenMatrix:
    """Random unit-row TokenMatrix with at least one real row."""
    m = int(rng.integers(1, m_max + 1))
    rows = rng.standard_normal((m, dim))
    if prefix_mask:
        n_true = int(rng.integers(1, m + 1))
        mask = np.zeros(m, dtype=bool)
        mask[:n_true] = True
    else:
        mask = rng.random(m) < 0.7
        if not mask.any():
            mask[int(rng.integers(0, m))] = True
    return l2_normalize_rows(rows, mask)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
