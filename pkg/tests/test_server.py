import numpy as np
import pytest
from fastapi.testclient import TestClient

from evret.cli import main
from evret.core import CoreConfig
from evret.corpus import CorpusItem
from evret.encoder import encode, init_encoder_params
from evret.index import build_index
from evret.server import create_app


@pytest.fixture(scope="module")
def setup():
    core_cfg = CoreConfig(dim=16, pad_len=8, seed=0)
    params_q = init_encoder_params(role="query", seed=3, dim=16, hidden_dim=16,
                                   vocab_size=512, visual_dim=4)
    params_d = init_encoder_params(role="document", seed=3, dim=16, hidden_dim=16,
                                   vocab_size=512, visual_dim=4)
    documents = [
        CorpusItem(id="d1", text="endangered turtle sale", kind="document"),
        CorpusItem(id="d2", text="mobile phone case", kind="document"),
        CorpusItem(id="d3", text="turtle habitat report",
                   visual_vecs=np.array([[0.1, 0.2, 0.3, 0.4]]), kind="document"),
    ]
    index = build_index([encode(d, params_d, core_cfg) for d in documents])
    return index, params_q, params_d, core_cfg, documents


@pytest.fixture(scope="module")
def client(setup):
    index, params_q, _, core_cfg, documents = setup
    return TestClient(create_app(index, params_q, core_cfg, documents))


class TestHealth:
    def test_reports_corpus_size_and_dim(self, client):
        resp = client.get("/api/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok", "corpus_size": 3, "dim": 16}


class TestDocLookup:
    def test_known_doc(self, client):
        resp = client.get("/api/doc/d1")
        assert resp.status_code == 200
        assert resp.json()["text"] == "endangered turtle sale"

    def test_unknown_doc_404(self, client):
        assert client.get("/api/doc/nope").status_code == 404


class TestSearch:
    def test_basic_search(self, client):
        resp = client.post("/api/search", json={"text": "endangered turtle", "k": 2})
        assert resp.status_code == 200
        hits = resp.json()["hits"]
        assert len(hits) == 2
        assert {"doc_id", "score", "text_snippet", "attributions"} <= set(hits[0])

    def test_attributions_sum_to_score(self, client):
        resp = client.post("/api/search", json={"text": "turtle sale", "k": 3})
        for hit in resp.json()["hits"]:
            total = sum(a["sim"] for a in hit["attributions"])
            assert abs(total - hit["score"]) < 1e-9

    def test_no_modalities_is_422(self, client):
        assert client.post("/api/search", json={"k": 5}).status_code == 422

    def test_empty_after_filter_is_422(self, client):
        resp = client.post("/api/search", json={"text": "turtle", "mode": "Vision", "k": 5})
        assert resp.status_code == 422

    def test_malformed_body_is_400(self, client):
        assert client.post("/api/search", json={"text": "x", "k": "ten"}).status_code == 400

    def test_invalid_json_is_400(self, client):
        resp = client.post("/api/search", content=b"{not json",
                           headers={"content-type": "application/json"})
        assert resp.status_code == 400

    def test_bad_mode_is_400(self, client):
        assert client.post("/api/search", json={"text": "x", "mode": "Audio"}).status_code == 400

    def test_visual_query(self, client):
        resp = client.post(
            "/api/search",
            json={"visual_vecs": [[0.1, 0.2, 0.3, 0.4]], "mode": "Vision", "k": 1},
        )
        assert resp.status_code == 200
        assert len(resp.json()["hits"]) == 1

    def test_wrong_visual_dim_is_400(self, client):
        resp = client.post("/api/search", json={"visual_vecs": [[0.1, 0.2]], "k": 1})
        assert resp.status_code == 400

    def test_approximate_mode(self, client):
        exact = client.post("/api/search", json={"text": "turtle", "k": 3}).json()
        approx = client.post(
            "/api/search", json={"text": "turtle", "k": 3, "exact": False, "probe": 100}
        ).json()
        assert approx == exact  # probe exceeds the pool, stages are exhaustive


class TestCrossSurfaceConsistency:
    def test_http_matches_cli_scores(self, setup, tmp_path, capsys):
        from evret.encoder import save_encoder_params
        from evret.index import save_index

        index, params_q, _, core_cfg, documents = setup
        idx_path = tmp_path / "c.idx"
        enc_path = tmp_path / "q.enc"
        save_index(index, idx_path)
        save_encoder_params(params_q, enc_path)

        rc = main([
            "search", "--index", str(idx_path), "--encoder", str(enc_path),
            "--text", "endangered turtle", "--k", "2", "--pad-len", "8",
        ])
        assert rc == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        cli_hits = [(r.split()[1], float(r.split()[2])) for r in rows]

        # the CLI path roundtrips the checkpoint through float32, so compare
        # against a server built from the same loaded artifacts
        from evret.encoder import load_encoder_params
        from evret.index import load_index

        app = create_app(load_index(idx_path), load_encoder_params(enc_path, "query"),
                         core_cfg, documents)
        http_hits = TestClient(app).post(
            "/api/search", json={"text": "endangered turtle", "k": 2}
        ).json()["hits"]
        assert [(h["doc_id"], h["score"]) for h in http_hits] == cli_hits


class TestFrontendMount:
    def test_serves_console_statics_next_to_api(self, setup, tmp_path):
        index, params_q, _, core_cfg, documents = setup
        (tmp_path / "index.html").write_text("<!doctype html><title>console</title>")
        (tmp_path / "dist").mkdir()
        (tmp_path / "dist" / "main.js").write_text("export {};")
        app = create_app(index, params_q, core_cfg, documents, frontend_dir=str(tmp_path))
        client = TestClient(app)
        assert client.get("/api/health").status_code == 200
        page = client.get("/")
        assert page.status_code == 200 and "console" in page.text
        assert client.get("/dist/main.js").status_code == 200
