#!/usr/bin/env python3
# Contrastive training of the two encoders on a synthetic topic corpus.
import numpy as np

from evret import (
    CoreConfig,
    SynthSpec,
    TrainConfig,
    Trainer,
    generate_synthetic,
    init_encoder_params,
    maxsim_score,
    encode,
    pairs_from_qrels,
)

spec = SynthSpec(n_topics=8, n_docs=80, n_queries=40, tokens_per_item=8,
                 vocab=800, noise_rate=0.1, seed=7)
docs, queries, qrels = generate_synthetic(spec)
pairs = pairs_from_qrels(queries, docs, qrels)
print(f"{len(docs)} documents, {len(pairs)} training pairs")

core_cfg = CoreConfig(dim=32, pad_len=16, seed=0)
cfg = TrainConfig(batch_size=16, lr=3e-3, epochs=30, seed=0)
params_q = init_encoder_params(role="query", seed=1, dim=32, hidden_dim=32, vocab_size=4096)
params_d = init_encoder_params(role="document", seed=2, dim=32, hidden_dim=32, vocab_size=4096)

# In-batch negatives: each batch of (query, document) pairs treats every
# mismatched document as a negative for every query.
trainer = Trainer(params_q, params_d, cfg, core_cfg)
for stats in trainer.train(pairs):
    if stats.epoch % 5 == 0 or stats.epoch == cfg.epochs - 1:
        print(f"epoch {stats.epoch:>3}  mean loss {stats.mean_loss:.4f}")

# After training, a query scores its source document far above a random one.
query, rel_id = queries[0], next(iter(qrels[queries[0].id]))
docs_by_id = {d.id: d for d in docs}
qm = encode(query, trainer.params_q, core_cfg).matrix
pos = maxsim_score(qm, encode(docs_by_id[rel_id], trainer.params_d, core_cfg).matrix).score
neg = maxsim_score(qm, encode(docs[-1], trainer.params_d, core_cfg).matrix).score
print(f"\nquery {query.id}: relevant doc scores {pos:.3f}, unrelated doc scores {neg:.3f}")
