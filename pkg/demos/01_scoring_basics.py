#!/usr/bin/env python3
# Token matrices, padding, row normalization, and late-interaction scoring.
import numpy as np

from evret import TokenMatrix, l2_normalize_rows, maxsim_score, pad_and_mask, single_vector_score

np.set_printoptions(precision=3, suppress=True)

# Three raw token vectors padded to length 5: the mask marks the real rows.
raw = np.array([[3.0, 4.0], [1.0, 0.0], [0.5, 0.5]])
padded = pad_and_mask(raw, pad_len=5)
print("mask:", padded.mask)

# Row-normalize so inner products become cosine similarities.
q = l2_normalize_rows(padded.rows, padded.mask)
print("unit query rows:\n", q.true_rows())

# A small document; every real row is unit norm.
d = l2_normalize_rows(
    np.array([[0.6, 0.8], [0.0, 1.0], [-1.0, 0.0], [0.0, 0.0]]),
    np.array([True, True, True, False]),
)

# The relevance score sums, per query token, the best inner product over
# document tokens. Attributions say which document row each token matched.
res = maxsim_score(q, d)
print(f"\nscore = {res.score:.4f}")
for qi, di, sim in zip(res.query_rows, res.doc_rows, res.sims):
    print(f"  query row {qi} -> doc row {di}  (sim {sim:+.4f})")

# The single-vector ablation only compares the first real rows.
print(f"\nsingle-vector score = {single_vector_score(q, d):.4f}")

# Padding never contributes: a query with extra pad rows scores the same.
q_padded = TokenMatrix(
    rows=np.vstack([q.true_rows(), np.zeros((2, 2))]),
    mask=np.array([True, True, True, False, False]),
)
assert abs(maxsim_score(q_padded, d).score - res.score) < 1e-12
print("padding rows contribute nothing: check passed")
