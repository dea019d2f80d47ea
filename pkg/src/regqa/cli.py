"""Command line entry point.

Subcommands: build-index, query, retrieve, serve, eval, grid-alpha.  All of
them take ``--config`` pointing at an INI file (see regqa.config).
"""

from __future__ import annotations

import argparse
import json
import sys

from regqa.config import load_config
from regqa.pipeline import DEFAULT_K_LIST, Pipeline


def _parse_k_list(raw: str) -> list[int]:
    try:
        ks = sorted({int(part) for part in raw.split(",") if part.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")
    if not ks or ks[0] < 1:
        raise argparse.ArgumentTypeError(f"k values must be positive, got {raw!r}")
    return ks


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regqa", description="Regulation question answering")
    parser.add_argument("--config", required=True, help="path to the INI config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="persist index, embeddings, and manifest")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("query", help="answer a single question")
    p.add_argument("question")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--fusion", default=None, help="weight | multiplication | lexical-only | dense-only")
    p.add_argument("--json", action="store_true", help="print the raw response object")

    p = sub.add_parser("retrieve", help="rank contexts for a question")
    p.add_argument("question")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--fusion", default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default=None, help="host:port, overrides the config")
    p.add_argument("--static-dir", default=None, help="directory with UI assets to serve at /")

    p = sub.add_parser("eval", help="score a QA split")
    p.add_argument("--split", default="dev", choices=["train", "dev", "test", "all"])
    p.add_argument("--k", type=_parse_k_list, default=None, help="comma-separated cutoffs")
    p.add_argument("--out", default=None, help="write the JSONL report here instead of stdout")
    p.add_argument("--smooth-bleu", action="store_true")

    p = sub.add_parser("grid-alpha", help="precision-at-k sweep over the fusion weight")
    p.add_argument("--split", default="dev", choices=["train", "dev", "test", "all"])
    p.add_argument("--k", type=_parse_k_list, default=None)
    return parser


def _cmd_query(pipeline: Pipeline, args) -> int:
    response = pipeline.answer_question(
        args.question, top_k=args.top_k, alpha=args.alpha, fusion_mode=args.fusion
    )
    if args.json:
        print(json.dumps(response.to_dict(), ensure_ascii=False, indent=2))
        return 0
    if response.no_answer:
        print("no answer found")
        for note in response.degradation:
            print(f"  note: {note}")
        return 1
    print(f"answer:     {response.abstractive}")
    print(f"extractive: {response.extractive}")
    print(f"article:    {response.article_id} ({response.article_title})")
    print(f"document:   {response.document_title}")
    scores = ", ".join(f"{name}={value:.4f}" for name, value in response.scores.items())
    print(f"scores:     {scores}")
    for note in response.degradation:
        print(f"note:       {note}")
    return 0


def _cmd_retrieve(pipeline: Pipeline, args) -> int:
    contexts = pipeline.retrieve(
        args.question, top_k=args.top_k, alpha=args.alpha, fusion_mode=args.fusion
    )
    for rank, ctx in enumerate(contexts, start=1):
        print(
            f"{rank:3d}. {ctx['article_id']}  fused={ctx['fused']:.4f} "
            f"lexical={ctx['lexical']:.4f} dense={ctx['dense']:.4f}  {ctx['title']}"
        )
    return 0


def _cmd_eval(pipeline: Pipeline, args) -> int:
    report = pipeline.run_eval(split=args.split, k_list=args.k, smooth_bleu=args.smooth_bleu)
    lines = [json.dumps(line, ensure_ascii=False, sort_keys=True) for line in report.lines()]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {len(lines)} lines to {args.out}")
    else:
        print("\n".join(lines))
    return 0


def _cmd_grid_alpha(pipeline: Pipeline, args) -> int:
    rows = pipeline.grid_alpha(split=args.split, k_list=args.k)
    ks = [key for key in rows[0] if key != "alpha"]
    print("alpha  " + "  ".join(f"{k:>8}" for k in ks))
    for row in rows:
        print(f"{row['alpha']:5.1f}  " + "  ".join(f"{row[k]:8.4f}" for k in ks))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "serve" and args.bind:
        cfg.bind = args.bind

    try:
        pipeline = Pipeline.from_config(cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "build-index":
        manifest = pipeline.build_artifacts(args.out)
        print(json.dumps(manifest, indent=2, sort_keys=True))
        return 0
    if args.command == "query":
        return _cmd_query(pipeline, args)
    if args.command == "retrieve":
        return _cmd_retrieve(pipeline, args)
    if args.command == "eval":
        return _cmd_eval(pipeline, args)
    if args.command == "grid-alpha":
        return _cmd_grid_alpha(pipeline, args)
    if args.command == "serve":
        import uvicorn

        from regqa.service import create_app

        app = create_app(pipeline, static_dir=args.static_dir)
        host, port = cfg.host_port
        uvicorn.run(app, host=host, port=port)
        return 0
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
