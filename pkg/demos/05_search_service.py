#!/usr/bin/env python3
# The HTTP search API the moderation console talks to, exercised in-process.
from fastapi.testclient import TestClient

from evret import (
    CoreConfig,
    SynthSpec,
    TrainConfig,
    Trainer,
    build_index,
    encode,
    generate_synthetic,
    init_encoder_params,
    pairs_from_qrels,
)
from evret.server import create_app

spec = SynthSpec(n_topics=6, n_docs=60, n_queries=30, tokens_per_item=8,
                 vocab=600, noise_rate=0.1, seed=11)
docs, queries, qrels = generate_synthetic(spec)
core_cfg = CoreConfig(dim=32, pad_len=16, seed=0)
cfg = TrainConfig(batch_size=16, lr=3e-3, epochs=30, seed=0)
pq = init_encoder_params(role="query", seed=1, dim=32, hidden_dim=32, vocab_size=4096)
pd = init_encoder_params(role="document", seed=2, dim=32, hidden_dim=32, vocab_size=4096)
trainer = Trainer(pq, pd, cfg, core_cfg)
trainer.train(pairs_from_qrels(queries, docs, qrels))
index = build_index([encode(d, trainer.params_d, core_cfg) for d in docs])

# Same app the `evret serve` command runs under uvicorn.
client = TestClient(create_app(index, trainer.params_q, core_cfg, docs))

print("GET /api/health ->", client.get("/api/health").json())

body = {"text": queries[0].text, "k": 3, "mode": "All", "exact": True}
hits = client.post("/api/search", json=body).json()["hits"]
print(f"\nPOST /api/search (text of {queries[0].id}):")
for hit in hits:
    print(f"  {hit['doc_id']}  score={hit['score']:.4f}  snippet={hit['text_snippet'][:40]!r}")
print("  first hit attribution rows:", hit and hits[0]["attributions"][:2])

doc_id = hits[0]["doc_id"]
print(f"\nGET /api/doc/{doc_id} ->", client.get(f"/api/doc/{doc_id}").json()["text"][:50], "...")

# Error contract: 422 when the modality filter empties the query.
resp = client.post("/api/search", json={"text": "anything", "mode": "Vision", "k": 3})
print(f"\nVision-mode text query -> HTTP {resp.status_code}: {resp.json()['detail']}")
