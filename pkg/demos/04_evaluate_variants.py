#!/usr/bin/env python3
# The evaluation protocol: three model variants x three modality ablations.
from evret import (
    CoreConfig,
    SynthSpec,
    TrainConfig,
    Trainer,
    generate_synthetic,
    init_encoder_params,
    pairs_from_qrels,
    run_eval,
)

# Multimodal synthetic benchmark: text tokens plus per-item visual vectors.
spec = SynthSpec(n_topics=10, n_docs=200, n_queries=60, tokens_per_item=10,
                 vocab=1500, noise_rate=0.2, seed=5, visual_dim=12, visual_per_item=2)
docs, queries, qrels = generate_synthetic(spec)
core_cfg = CoreConfig(dim=32, pad_len=16, seed=0)
cfg = TrainConfig(batch_size=16, lr=3e-3, epochs=40, seed=0)
pq = init_encoder_params(role="query", seed=1, dim=32, hidden_dim=32,
                         vocab_size=4096, visual_dim=12)
pd = init_encoder_params(role="document", seed=2, dim=32, hidden_dim=32,
                         vocab_size=4096, visual_dim=12)
trainer = Trainer(pq, pd, cfg, core_cfg)
trainer.train(pairs_from_qrels(queries, docs, qrels))

# full        trained encoders + late-interaction ranking
# no_maxsim   trained encoders + first-token similarity ranking
# fix_encoder seeded untrained encoders + late-interaction ranking
print(f"{'variant':<14}{'modality':<10}{'MRR@10':>8}{'R@10':>8}{'R@50':>8}")
for variant in ("full", "no_maxsim", "fix_encoder"):
    for modality in ("All", "Vision", "Text"):
        rep = run_eval(docs, queries, qrels, trainer.params_q, trainer.params_d,
                       core_cfg, variant=variant, modality=modality)
        print(f"{variant:<14}{modality:<10}{rep.mrr_at_10:>8.3f}{rep.r_at_10:>8.3f}{rep.r_at_50:>8.3f}")

rep = run_eval(docs, queries, qrels, trainer.params_q, trainer.params_d, core_cfg)
print()
print(rep.format_table())
