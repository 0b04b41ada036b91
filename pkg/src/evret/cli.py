"""Command-line surface: synth, train, index, search, eval, serve.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; results go to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import CoreConfig
from .corpus import (
    CorpusItem,
    SynthSpec,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from .encoder import (
    DEFAULT_VOCAB_SIZE,
    encode,
    init_encoder_params,
    load_encoder_params,
    save_encoder_params,
)
from .errors import EvretError
from .evaluation import MODALITY_MODES, VARIANTS, load_qrels, run_eval, save_qrels
from .index import DEFAULT_PROBE, build_index, load_index, save_index, search_approx, search_exact
from .training import (
    LOSS_MODES,
    TrainConfig,
    Trainer,
    load_pairs,
    pairs_from_qrels,
    save_pairs,
)
from .scoring import SCORE_MODES

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="evret", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synth", help="generate a synthetic corpus, queries, qrels, and training pairs")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--n-topics", type=int, default=10)
    sp.add_argument("--n-docs", type=int, default=100)
    sp.add_argument("--n-queries", type=int, default=20)
    sp.add_argument("--tokens-per-item", type=int, default=12)
    sp.add_argument("--vocab", type=int, default=2000)
    sp.add_argument("--noise-rate", type=float, default=0.2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--visual-dim", type=int, default=0)
    sp.add_argument("--visual-per-item", type=int, default=0)

    tp = sub.add_parser("train", help="train query/document encoders on a pairs file")
    tp.add_argument("--pairs", required=True, help="JSONL file of {query, document} pairs")
    tp.add_argument("--out", required=True, help="checkpoint prefix; writes <out>.query.enc and <out>.doc.enc")
    tp.add_argument("--stats", help="write per-batch loss records (JSONL) here instead of stdout")
    tp.add_argument("--dim", type=int, default=64)
    tp.add_argument("--pad-len", type=int, default=256)
    tp.add_argument("--hidden-dim", type=int, default=64)
    tp.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    tp.add_argument("--batch-size", type=int, default=32)
    tp.add_argument("--tau", type=float, default=1.0)
    tp.add_argument("--lr", type=float, default=1e-4)
    tp.add_argument("--epochs", type=int, default=1)
    tp.add_argument("--loss-mode", choices=LOSS_MODES, default="standard")
    tp.add_argument("--score-mode", choices=SCORE_MODES, default="maxsim")
    tp.add_argument("--seed", type=int, default=0)
    tp.add_argument("--tie-encoders", action="store_true")

    ip = sub.add_parser("index", help="encode a corpus file and write a searchable index")
    ip.add_argument("--corpus", required=True)
    ip.add_argument("--encoder", required=True, help="document-side checkpoint")
    ip.add_argument("--out", required=True)
    ip.add_argument("--pad-len", type=int, default=256)

    qp = sub.add_parser("search", help="rank documents for a query")
    qp.add_argument("--index", required=True)
    qp.add_argument("--encoder", required=True, help="query-side checkpoint")
    qp.add_argument("--text", help="query text")
    qp.add_argument("--query-file", help="JSONL file of query items (text and/or visual_vecs)")
    qp.add_argument("--k", type=int, default=10)
    qp.add_argument("--pad-len", type=int, default=256)
    group = qp.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", default=True)
    group.add_argument("--probe", type=int, help="approximate search with this candidate probe depth")

    ep = sub.add_parser("eval", help="run the metrics protocol for one variant/modality")
    ep.add_argument("--documents", required=True)
    ep.add_argument("--queries", required=True)
    ep.add_argument("--qrels", required=True)
    ep.add_argument("--query-encoder", required=True)
    ep.add_argument("--doc-encoder", required=True)
    ep.add_argument("--variant", choices=VARIANTS, default="full")
    ep.add_argument("--modality", choices=MODALITY_MODES, default="All")
    ep.add_argument("--pad-len", type=int, default=256)
    ep.add_argument("--seed", type=int, default=0, help="init seed for the fix_encoder variant")
    ep.add_argument("--records", help="also write key=value records to this file")

    vp = sub.add_parser("serve", help="serve the HTTP search API over an index")
    vp.add_argument("--index", required=True)
    vp.add_argument("--encoder", required=True, help="query-side checkpoint")
    vp.add_argument("--corpus", help="corpus file for document lookups and snippets")
    vp.add_argument("--frontend", help="directory with the built review console to serve at /")
    vp.add_argument("--port", type=int, default=8080, help="overridden by env var OFAR_PORT when set")
    vp.add_argument("--host", default="127.0.0.1")
    vp.add_argument("--pad-len", type=int, default=256)

    return p


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        n_topics=args.n_topics,
        n_docs=args.n_docs,
        n_queries=args.n_queries,
        tokens_per_item=args.tokens_per_item,
        vocab=args.vocab,
        noise_rate=args.noise_rate,
        seed=args.seed,
        visual_dim=args.visual_dim,
        visual_per_item=args.visual_per_item,
    )
    documents, queries, qrels = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(documents, out / "documents.jsonl")
    save_corpus(queries, out / "queries.jsonl")
    save_qrels(qrels, out / "qrels.tsv")
    save_pairs(pairs_from_qrels(queries, documents, qrels), out / "pairs.jsonl")
    print(f"wrote {len(documents)} documents, {len(queries)} queries to {out}")
    return 0


def _cmd_train(args) -> int:
    pairs = load_pairs(args.pairs)
    visual_dim = 0
    for p in pairs:
        for item in (p.query, p.document):
            if item.has_visual:
                visual_dim = item.visual_vecs.shape[1]
                break
        if visual_dim:
            break
    core_cfg = CoreConfig(dim=args.dim, pad_len=args.pad_len, seed=args.seed)
    cfg = TrainConfig(
        batch_size=args.batch_size,
        tau=args.tau,
        lr=args.lr,
        epochs=args.epochs,
        loss_mode=args.loss_mode,
        score_mode=args.score_mode,
        seed=args.seed,
        tie_encoders=args.tie_encoders,
    )
    params_q = init_encoder_params(
        role="query", seed=args.seed, dim=args.dim, hidden_dim=args.hidden_dim,
        vocab_size=args.vocab_size, visual_dim=visual_dim,
    )
    params_d = init_encoder_params(
        role="document", seed=args.seed + 1, dim=args.dim, hidden_dim=args.hidden_dim,
        vocab_size=args.vocab_size, visual_dim=visual_dim,
    )
    trainer = Trainer(params_q, params_d, cfg, core_cfg)
    stats_out = open(args.stats, "w", encoding="utf-8") if args.stats else sys.stdout
    try:
        for epoch in range(cfg.epochs):
            stats = trainer.train_epoch(pairs, epoch)
            for rec in stats.to_records():
                stats_out.write(json.dumps(rec) + "\n")
            print(f"epoch {epoch}: mean loss {stats.mean_loss:.6f}", file=sys.stderr)
    finally:
        if args.stats:
            stats_out.close()
    save_encoder_params(trainer.params_q, f"{args.out}.query.enc")
    save_encoder_params(trainer.params_d, f"{args.out}.doc.enc")
    print(f"wrote {args.out}.query.enc and {args.out}.doc.enc")
    return 0


def _cmd_index(args) -> int:
    params_d = load_encoder_params(args.encoder, role="document")
    core_cfg = CoreConfig(dim=params_d.dim, pad_len=args.pad_len)
    items = load_corpus(args.corpus)
    index = build_index([encode(item, params_d, core_cfg) for item in items])
    save_index(index, args.out)
    print(f"indexed {index.n_docs} documents ({index.n_tokens} token rows) -> {args.out}")
    return 0


def _print_hits(hits, header: str) -> None:
    print(header)
    if not hits.entries:
        print("  (no hits)")
        return
    for rank, hit in enumerate(hits.entries, start=1):
        print(f"{rank:>4}  {hit.doc_id:<24}  {hit.score!r}")


def _cmd_search(args) -> int:
    if bool(args.text) == bool(args.query_file):
        print("search: provide exactly one of --text / --query-file", file=sys.stderr)
        return USAGE_EXIT
    params_q = load_encoder_params(args.encoder, role="query")
    core_cfg = CoreConfig(dim=params_q.dim, pad_len=args.pad_len)
    index = load_index(args.index)
    if args.text:
        queries = [CorpusItem(id="cli-query", text=args.text, kind="query")]
    else:
        queries = load_corpus(args.query_file)
    for q in queries:
        matrix = encode(q, params_q, core_cfg).matrix
        if args.probe is not None:
            hits = search_approx(index, matrix, args.k, probe=args.probe)
        else:
            hits = search_exact(index, matrix, args.k)
        _print_hits(hits, f"query {q.id}:")
    return 0


def _cmd_eval(args) -> int:
    params_q = load_encoder_params(args.query_encoder, role="query")
    params_d = load_encoder_params(args.doc_encoder, role="document")
    core_cfg = CoreConfig(dim=params_q.dim, pad_len=args.pad_len, seed=args.seed)
    report = run_eval(
        documents=load_corpus(args.documents),
        queries=load_corpus(args.queries),
        qrels=load_qrels(args.qrels),
        params_q=params_q,
        params_d=params_d,
        core_cfg=core_cfg,
        variant=args.variant,
        modality=args.modality,
    )
    print(report.format_table())
    records = report.to_records()
    if args.records:
        Path(args.records).write_text("\n".join(records) + "\n", encoding="utf-8")
    else:
        print()
        for rec in records[:3]:  # summary metrics; per-query lines go to --records
            print(rec)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    params_q = load_encoder_params(args.encoder, role="query")
    core_cfg = CoreConfig(dim=params_q.dim, pad_len=args.pad_len)
    index = load_index(args.index)
    documents = load_corpus(args.corpus) if args.corpus else None
    app = create_app(index, params_q, core_cfg, documents, frontend_dir=args.frontend)
    port = int(os.environ.get("OFAR_PORT", args.port))
    uvicorn.run(app, host=args.host, port=port)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "index": _cmd_index,
    "search": _cmd_search,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except (EvretError, OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"evret {args.command}: {e}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
