"""Command-line client over the pipeline.

Verbs mirror the workflow stages: ``mine``, ``parse``, ``train``,
``evaluate``, ``predict``, ``export-finetune`` run in-process against the
local store (so ``--offline`` can guarantee zero network use); ``serve``
starts the HTTP API. Exit codes: 0 success, 1 usage error, 2 runtime
failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Optional

from .config import AppConfig, ConfigError
from .miner import InvalidRepoError, RepoRef
from .store import Store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skillscope", description=__doc__)
    parser.add_argument("--store", default="store", help="store directory (default ./store)")
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the configured RNG seed")
    parser.add_argument(
        "--offline", action="store_true",
        help="forbid all network use; replay cassettes and stub providers only",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    mine = sub.add_parser("mine", help="mine merged PRs, issues and Java files")
    mine.add_argument("--repo", required=True)
    mine.add_argument("--cassette", default=None, help="replay transport cassette")

    parse = sub.add_parser("parse", help="label mined issues into a training dataset")
    parse.add_argument("--repo", required=True)

    train = sub.add_parser("train", help="train the one-vs-all forest model")
    train.add_argument("--repo", required=True)

    evaluate = sub.add_parser("evaluate", help="recompute held-out metrics for a bundle")
    evaluate.add_argument("--repo", required=True)
    evaluate.add_argument("--model", default=None)

    predict = sub.add_parser("predict", help="predict skills for open issues")
    predict.add_argument("--repo", required=True)
    predict.add_argument("--model", default=None)
    predict.add_argument("--limit", type=int, default=10)
    predict.add_argument("--skills", type=int, default=3)
    predict.add_argument("--algorithm", choices=["rf", "llm"], default="rf")
    predict.add_argument("--cassette", default=None, help="replay transport cassette")

    export = sub.add_parser("export-finetune", help="write per-domain fine-tune datasets")
    export.add_argument("--repo", required=True)
    export.add_argument("--out", required=True)
    export.add_argument("--synthetic", action="store_true", help="rephrase minority domains first")

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--frontend", default=None, help="static UI directory to mount at /ui")
    return parser


def load_config(args) -> AppConfig:
    config = AppConfig.from_file(args.config) if args.config else AppConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.offline:
        config = dataclasses.replace(config, offline=True)
    cassette = getattr(args, "cassette", None)
    if cassette:
        config = dataclasses.replace(
            config, miner=dataclasses.replace(config.miner, cassette=cassette)
        )
    return config


def emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    from . import pipeline

    store = Store(args.store)
    try:
        if args.verb == "serve":
            import uvicorn

            from .service import create_app

            app = create_app(args.store, config, static_dir=args.frontend)
            uvicorn.run(app, host=args.host, port=args.port)
            return EXIT_OK

        repo = RepoRef.parse(args.repo)
        if args.verb == "mine":
            manifest = pipeline.run_mine(store, repo, config)
            emit(manifest.to_dict())
        elif args.verb == "parse":
            emit(pipeline.run_parse(store, repo, config))
        elif args.verb == "train":
            model_id, report = pipeline.run_train(store, repo, config)
            emit({"model_id": model_id, "report": report})
        elif args.verb == "evaluate":
            emit(pipeline.run_evaluate(store, repo, config, model_id=args.model))
        elif args.verb == "predict":
            emit(
                pipeline.run_predict(
                    store, repo, config,
                    limit=args.limit,
                    skills_per_issue=args.skills,
                    algorithm=args.algorithm,
                    model_id=args.model,
                )
            )
        elif args.verb == "export-finetune":
            emit(pipeline.run_export_finetune(store, repo, config, args.out, synthetic=args.synthetic))
        return EXIT_OK
    except InvalidRepoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(json.dumps({"error": {"code": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
