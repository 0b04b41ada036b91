import numpy as np
import pytest

from evret.core import CoreConfig
from evret.corpus import CorpusItem, SynthSpec, generate_synthetic
from evret.encoder import init_encoder_params
from evret.errors import (
    DuplicateInRankingError,
    EmptyRelevantError,
    MissingArtifactsError,
)
from evret.evaluation import (
    apply_modality_filter,
    load_qrels,
    mrr_at_k,
    recall_at_k,
    run_eval,
    save_qrels,
)
from evret.training import TrainConfig, Trainer, pairs_from_qrels


class TestMrrAtK:
    def test_first_relevant_at_rank_three(self):
        assert mrr_at_k(["a", "b", "c", "d"], {"c"}, k=10) == pytest.approx(1 / 3)

    def test_no_relevant_in_top_k(self):
        assert mrr_at_k([f"d{i}" for i in range(20)], {"d15"}, k=10) == 0.0

    def test_relevant_at_rank_one(self):
        assert mrr_at_k(["a", "b"], {"a"}, k=10) == 1.0

    def test_duplicate_in_ranking(self):
        with pytest.raises(DuplicateInRankingError):
            mrr_at_k(["a", "a"], {"a"}, k=10)


class TestRecallAtK:
    def test_single_relevant_present(self):
        assert recall_at_k(["a", "b", "c"], {"b"}, k=10) == 1.0

    def test_half_found(self):
        assert recall_at_k(["a", "b", "c"], {"a", "z"}, k=10) == 0.5

    def test_k_at_least_corpus_size(self):
        ranking = [f"d{i}" for i in range(30)]
        assert recall_at_k(ranking, {"d7", "d21"}, k=30) == 1.0

    def test_empty_relevant(self):
        with pytest.raises(EmptyRelevantError):
            recall_at_k(["a"], set(), k=10)

    def test_reversed_retriever_fixture(self):
        # relevant doc sits at rank 50 of a reversed 100-doc ranking
        ranking = [f"d{i:03d}" for i in range(99, -1, -1)]
        relevant = {ranking[49]}
        assert recall_at_k(ranking, relevant, k=50) == 1.0
        assert recall_at_k(ranking, relevant, k=10) == 0.0
        assert mrr_at_k(ranking, relevant, k=10) == 0.0

    def test_recall_monotone_in_k(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            ranking = [f"d{i}" for i in rng.permutation(n)]
            relevant = {f"d{i}" for i in rng.choice(n, size=min(3, n), replace=False)}
            r10 = recall_at_k(ranking, relevant, 10)
            r50 = recall_at_k(ranking, relevant, 50)
            assert 0.0 <= r10 <= r50 <= 1.0
            assert 0.0 <= mrr_at_k(ranking, relevant, 10) <= 1.0

    def test_relabeling_invariance(self, rng):
        ranking = [f"d{i}" for i in range(20)]
        relevant = {"d3", "d11"}
        mapping = {f"d{i}": f"x{i + 100}" for i in range(20)}
        ranking2 = [mapping[d] for d in ranking]
        relevant2 = {mapping[d] for d in relevant}
        for k in (5, 10, 50):
            assert mrr_at_k(ranking, relevant, k) == mrr_at_k(ranking2, relevant2, k)
            assert recall_at_k(ranking, relevant, k) == recall_at_k(ranking2, relevant2, k)


class TestModalityFilter:
    def _item(self):
        return CorpusItem(id="x", text="hello", visual_vecs=np.ones((1, 4)), kind="query")

    def test_all_is_identity(self):
        item = self._item()
        assert apply_modality_filter(item, "All") is item

    def test_text_strips_visuals(self):
        out = apply_modality_filter(self._item(), "Text")
        assert out.has_text and not out.has_visual

    def test_vision_strips_text(self):
        out = apply_modality_filter(self._item(), "Vision")
        assert out.has_visual and not out.has_text

    def test_vision_on_text_only_item_is_skipped(self):
        item = CorpusItem(id="x", text="hello", kind="query")
        assert apply_modality_filter(item, "Vision") is None

    def test_text_on_visual_only_item_is_skipped(self):
        item = CorpusItem(id="x", visual_vecs=np.ones((1, 4)), kind="query")
        assert apply_modality_filter(item, "Text") is None

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            apply_modality_filter(self._item(), "audio")


class TestQrelsIO:
    def test_roundtrip(self, tmp_path):
        qrels = {"q1": {"d1", "d2"}, "q2": {"d3"}}
        path = tmp_path / "qrels.tsv"
        save_qrels(qrels, path)
        assert load_qrels(path) == qrels

    def test_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "qrels.tsv"
        path.write_text("q1 d1\n")  # space, not tab
        with pytest.raises(ValueError):
            load_qrels(path)


def _train_small(noise=0.0, n_docs=60, n_queries=30, epochs=40, visual_dim=0,
                 visual_per_item=0, seed=0, batch_size=16):
    spec = SynthSpec(n_topics=6, n_docs=n_docs, n_queries=n_queries, tokens_per_item=8,
                     vocab=600, noise_rate=noise, seed=seed,
                     visual_dim=visual_dim, visual_per_item=visual_per_item)
    docs, queries, qrels = generate_synthetic(spec)
    pairs = pairs_from_qrels(queries, docs, qrels)
    core_cfg = CoreConfig(dim=32, pad_len=16, seed=seed)
    cfg = TrainConfig(batch_size=batch_size, lr=3e-3, epochs=epochs, seed=seed)
    pq = init_encoder_params(role="query", seed=seed + 100, dim=32, hidden_dim=32,
                             vocab_size=2048, visual_dim=visual_dim)
    pd = init_encoder_params(role="document", seed=seed + 101, dim=32, hidden_dim=32,
                             vocab_size=2048, visual_dim=visual_dim)
    trainer = Trainer(pq, pd, cfg, core_cfg)
    trainer.train(pairs)
    return docs, queries, qrels, trainer, core_cfg


class TestRunEval:
    def test_perfect_retriever_fixture(self):
        # queries repeat their document's exact text and both sides share weights,
        # so the relevant doc always lands at rank 1
        docs = [CorpusItem(id=f"d{i}", text=f"topic{i} word{i} extra{i}", kind="document")
                for i in range(8)]
        queries = [CorpusItem(id=f"q{i}", text=docs[i].text, kind="query") for i in range(8)]
        qrels = {f"q{i}": {f"d{i}"} for i in range(8)}
        core_cfg = CoreConfig(dim=16, pad_len=8, seed=0)
        shared_q = init_encoder_params(role="query", seed=9, dim=16, hidden_dim=16, vocab_size=512)
        shared_d = init_encoder_params(role="document", seed=9, dim=16, hidden_dim=16, vocab_size=512)
        report = run_eval(docs, queries, qrels, shared_q, shared_d, core_cfg,
                          variant="full", modality="All")
        assert report.mrr_at_10 == 1.0
        assert report.r_at_10 == 1.0
        assert report.r_at_50 == 1.0

    def test_variant_ordering_on_synthetic_benchmark(self):
        docs, queries, qrels, trainer, core_cfg = _train_small()
        scores = {}
        for variant in ("full", "no_maxsim", "fix_encoder"):
            scores[variant] = run_eval(
                docs, queries, qrels, trainer.params_q, trainer.params_d, core_cfg,
                variant=variant, modality="All",
            ).mrr_at_10
        assert scores["full"] > scores["no_maxsim"] > scores["fix_encoder"]

    def test_separable_zero_noise_ranks_source_first(self):
        # one topic per document with disjoint vocabulary slices
        spec = SynthSpec(n_topics=24, n_docs=24, n_queries=24, tokens_per_item=8,
                         vocab=600, noise_rate=0.0, seed=1)
        docs, queries, qrels = generate_synthetic(spec)
        pairs = pairs_from_qrels(queries, docs, qrels)
        core_cfg = CoreConfig(dim=32, pad_len=16, seed=0)
        cfg = TrainConfig(batch_size=8, lr=3e-3, epochs=40, seed=0)
        pq = init_encoder_params(role="query", seed=100, dim=32, hidden_dim=32, vocab_size=2048)
        pd = init_encoder_params(role="document", seed=101, dim=32, hidden_dim=32, vocab_size=2048)
        trainer = Trainer(pq, pd, cfg, core_cfg)
        trainer.train(pairs)
        report = run_eval(docs, queries, qrels, trainer.params_q, trainer.params_d,
                          core_cfg, variant="full", modality="All")
        assert report.mrr_at_10 == 1.0

    def test_pure_noise_queries_score_near_untrained_on_heldout(self):
        spec = SynthSpec(n_topics=6, n_docs=100, n_queries=80, tokens_per_item=8,
                         vocab=600, noise_rate=1.0, seed=0)
        docs, queries, qrels = generate_synthetic(spec)
        train_q, eval_q = queries[:40], queries[40:]
        pairs = pairs_from_qrels(train_q, docs, qrels)
        core_cfg = CoreConfig(dim=32, pad_len=16, seed=0)
        cfg = TrainConfig(batch_size=16, lr=3e-3, epochs=40, seed=0)
        pq = init_encoder_params(role="query", seed=100, dim=32, hidden_dim=32, vocab_size=2048)
        pd = init_encoder_params(role="document", seed=101, dim=32, hidden_dim=32, vocab_size=2048)
        trainer = Trainer(pq, pd, cfg, core_cfg)
        trainer.train(pairs)
        trained = run_eval(docs, eval_q, qrels, trainer.params_q, trainer.params_d,
                           core_cfg, variant="full", modality="All").mrr_at_10
        untrained = run_eval(docs, eval_q, qrels, pq, pd, core_cfg,
                             variant="fix_encoder", modality="All").mrr_at_10
        assert trained < 0.15
        assert abs(trained - untrained) < 0.12

    def test_modality_skip_counting(self):
        docs = [CorpusItem(id="d1", text="alpha beta", kind="document"),
                CorpusItem(id="d2", text="gamma delta", visual_vecs=np.ones((1, 4)), kind="document")]
        queries = [CorpusItem(id="q1", text="alpha", kind="query"),
                   CorpusItem(id="q2", text="gamma", visual_vecs=np.ones((1, 4)), kind="query")]
        qrels = {"q1": {"d1"}, "q2": {"d2"}}
        core_cfg = CoreConfig(dim=16, pad_len=8, seed=0)
        pq = init_encoder_params(role="query", seed=1, dim=16, hidden_dim=16,
                                 vocab_size=256, visual_dim=4)
        pd = init_encoder_params(role="document", seed=2, dim=16, hidden_dim=16,
                                 vocab_size=256, visual_dim=4)
        report = run_eval(docs, queries, qrels, pq, pd, core_cfg,
                          variant="full", modality="Vision")
        assert report.n_evaluated == 1 and report.n_skipped == 1

    def test_all_queries_skipped_raises(self):
        docs = [CorpusItem(id="d1", text="alpha", visual_vecs=np.ones((1, 4)), kind="document")]
        queries = [CorpusItem(id="q1", text="alpha", kind="query")]
        qrels = {"q1": {"d1"}}
        core_cfg = CoreConfig(dim=16, pad_len=8, seed=0)
        pq = init_encoder_params(role="query", seed=1, dim=16, hidden_dim=16,
                                 vocab_size=256, visual_dim=4)
        pd = init_encoder_params(role="document", seed=2, dim=16, hidden_dim=16,
                                 vocab_size=256, visual_dim=4)
        with pytest.raises(MissingArtifactsError):
            run_eval(docs, queries, qrels, pq, pd, core_cfg, variant="full", modality="Vision")

    def test_missing_params(self):
        docs = [CorpusItem(id="d1", text="alpha", kind="document")]
        queries = [CorpusItem(id="q1", text="alpha", kind="query")]
        with pytest.raises(MissingArtifactsError):
            run_eval(docs, queries, {"q1": {"d1"}}, None, None, CoreConfig(dim=16, pad_len=8))

    def test_deterministic(self):
        docs, queries, qrels, trainer, core_cfg = _train_small(n_docs=30, n_queries=10, epochs=5, batch_size=8)
        a = run_eval(docs, queries, qrels, trainer.params_q, trainer.params_d, core_cfg,
                     variant="fix_encoder", modality="All")
        b = run_eval(docs, queries, qrels, trainer.params_q, trainer.params_d, core_cfg,
                     variant="fix_encoder", modality="All")
        assert a.per_query == b.per_query
        assert (a.mrr_at_10, a.r_at_10, a.r_at_50) == (b.mrr_at_10, b.r_at_10, b.r_at_50)

    def test_report_serialization(self):
        docs, queries, qrels, trainer, core_cfg = _train_small(n_docs=30, n_queries=10, epochs=5, batch_size=8)
        report = run_eval(docs, queries, qrels, trainer.params_q, trainer.params_d, core_cfg,
                          variant="full", modality="All")
        table = report.format_table()
        assert "MRR@10" in table and "R@50" in table
        records = report.to_records()
        assert any("metric=mrr_at_10" in r for r in records)
        assert any(f"query={queries[0].id}" in r for r in records)
        assert report.r_at_10 <= report.r_at_50
