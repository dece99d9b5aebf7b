"""Single entry point: synth, ingest, split, featurize, train, eval,
ablate, rank and serve subcommands.

Exit codes: 0 success, 1 argument/config validation error, 2 runtime
failure. JSON config files may be combined with flags; flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .ablation import ABLATION_BRANCHES, ablation_table, run_ablation
from .domain import MediaKind, post_from_json
from .featurize import make_featurizer, write_sidecar_dir
from .fusion import (
    FusionConfig,
    branch_config,
    concat_features,
    featurize_posts,
    forward,
    load_model,
    save_model,
    train,
)
from .ingestion import (
    clean_corpus,
    load_corpus,
    read_split_dir,
    split_corpus,
    write_corpus,
    write_split_dir,
)
from .metrics import evaluate_scores, roc_csv
from .synthgen import SynthConfig, generate_corpus
from .triage import QueueEntry, rank_queue, write_queue

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # validation problems exit 1, not argparse's default 2
    def error(self, message: str):
        raise _UsageError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--log-level", default="INFO", help="logging level (default INFO)")


def build_parser() -> _Parser:
    parser = _Parser(prog="taxledger", description=__doc__)
    parser.add_argument("--version", action="version", version=f"taxledger {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--config", type=Path, default=None, help="SynthConfig JSON file")
    p.add_argument("--out", type=Path, required=True, help="output corpus JSONL")
    p.add_argument("--images-dir", type=Path, default=None)
    p.add_argument("--n-posts", type=int, default=None)
    p.add_argument("--positive-rate", type=float, default=None)
    p.add_argument("--signal", type=float, nargs=3, metavar=("H", "C", "I"), default=None)
    p.add_argument("--video-fraction", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("ingest", help="load, validate and optionally clean a corpus")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--clean", action="store_true", help="drop unavailable + duplicate posts")
    p.add_argument("--report", type=Path, default=None, help="write the clean report JSON here")
    p.add_argument("--out", type=Path, default=None, help="write the resulting corpus here")
    _add_common(p)

    p = sub.add_parser("split", help="seeded train/validation/test split")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--test", type=int, required=True, help="test-set size")
    p.add_argument("--val", type=float, default=0.2, help="validation fraction of the training pool")
    p.add_argument("--out-dir", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("featurize", help="precompute sidecar embedding files")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--video-policy", choices=("noise", "zero"), default="noise")
    _add_common(p)

    p = sub.add_parser("train", help="train the fused classifier")
    p.add_argument("--splits", type=Path, required=True, help="split directory")
    p.add_argument("--features", choices=("baseline", "sidecar"), default="baseline")
    p.add_argument("--sidecar-dir", type=Path, default=None)
    p.add_argument("--config", type=Path, default=None, help="FusionConfig JSON file")
    p.add_argument("--out", type=Path, required=True, help="model checkpoint path")
    p.add_argument("--report", type=Path, default=None, help="write the train report JSON here")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--branch", choices=ABLATION_BRANCHES, default="multi-modal")
    p.add_argument("--video-policy", choices=("noise", "zero"), default="noise")
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate a model on a labeled test file")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--roc", type=Path, default=None, help="ROC CSV output")
    p.add_argument("--features", choices=("baseline", "sidecar"), default="baseline")
    p.add_argument("--sidecar-dir", type=Path, default=None)
    p.add_argument("--video-policy", choices=("noise", "zero"), default="noise")
    _add_common(p)

    p = sub.add_parser("ablate", help="train the four per-modality models")
    p.add_argument("--splits", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", type=Path, required=True, help="ablation table JSON")
    p.add_argument("--roc-dir", type=Path, default=None, help="write per-branch ROC CSVs here")
    p.add_argument("--features", choices=("baseline", "sidecar"), default="baseline")
    p.add_argument("--sidecar-dir", type=Path, default=None)
    p.add_argument("--video-policy", choices=("noise", "zero"), default="noise")
    _add_common(p)

    p = sub.add_parser("rank", help="score unlabeled posts into a triage queue")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="queue JSONL")
    p.add_argument("--features", choices=("baseline", "sidecar"), default="baseline")
    p.add_argument("--sidecar-dir", type=Path, default=None)
    p.add_argument("--video-policy", choices=("noise", "zero"), default="noise")
    _add_common(p)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--port", type=int, default=8200)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--queue", type=Path, required=True)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--data-dir", type=Path, default=None, help="defaults to $LEDGER_DATA_DIR")
    p.add_argument("--token", default=None, help="defaults to $LEDGER_TOKEN")
    p.add_argument("--features", choices=("baseline", "sidecar"), default="baseline")
    p.add_argument("--sidecar-dir", type=Path, default=None)
    p.add_argument("--video-policy", choices=("noise", "zero"), default="noise")
    _add_common(p)

    return parser


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _log_resolved(args: argparse.Namespace) -> None:
    resolved = {k: str(v) for k, v in vars(args).items()}
    logger.info("resolved config: %s", json.dumps(resolved, sort_keys=True))


def _load_json(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _write_json(path: Path, obj: Any) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _fusion_config(args: argparse.Namespace) -> FusionConfig:
    config = FusionConfig.from_dict(_load_json(getattr(args, "config", None)))
    if getattr(args, "epochs", None) is not None:
        config = replace(config, epochs=args.epochs)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _cmd_synth(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {}
    if args.n_posts is not None:
        overrides["n_posts"] = args.n_posts
    if args.positive_rate is not None:
        overrides["positive_rate"] = args.positive_rate
    if args.signal is not None:
        overrides["modality_signal"] = tuple(args.signal)
    if args.video_fraction is not None:
        overrides["video_fraction"] = args.video_fraction
    if args.seed is not None:
        overrides["seed"] = args.seed
    base = _load_json(args.config)
    base.update(overrides)
    if "n_posts" not in base:
        raise _UsageError("synth needs --n-posts or a config file with n_posts")
    config = SynthConfig.from_dict(base)
    manifest = generate_corpus(config)
    positives = sum(1 for r in manifest.records if r.labels.hidden_economy)
    write_corpus(manifest, args.out, images_dir=args.images_dir)
    logger.info("wrote %d posts (%d positive) to %s", len(manifest), positives, args.out)
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    manifest = load_corpus(args.input)
    report = None
    if args.clean:
        manifest, report = clean_corpus(manifest)
    if args.report is not None:
        payload = {"records": len(manifest)}
        if report is not None:
            payload.update(report.to_dict())
        _write_json(args.report, payload)
    if args.out is not None:
        write_corpus(manifest, args.out)
    summary = f"{len(manifest)} records"
    if report is not None:
        summary += (
            f" (removed {report.removed_unavailable} unavailable,"
            f" {report.removed_duplicates} duplicates)"
        )
    print(summary)
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    manifest = load_corpus(args.input)
    seed = args.seed if args.seed is not None else 0
    split = split_corpus(manifest, test_size=args.test, val_fraction=args.val, seed=seed)
    write_split_dir(split, args.out_dir)
    print(
        f"train={len(split.train)} validation={len(split.validation)} test={len(split.test)}"
    )
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    manifest = load_corpus(args.input)
    featurizer = make_featurizer("baseline", video_policy=args.video_policy)
    write_sidecar_dir(manifest.records, args.out_dir, featurizer)
    print(f"wrote sidecar embeddings for {len(manifest)} posts to {args.out_dir}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    split = read_split_dir(args.splits)
    config = _fusion_config(args)
    if args.branch != "multi-modal":
        config = branch_config(config, args.branch)
    featurizer = make_featurizer(args.features, args.sidecar_dir, args.video_policy)
    report, params = train(split, featurizer.bundle, config)
    save_model(args.out, params, config)
    if args.report is not None:
        _write_json(args.report, report.to_dict())
    final = report.epochs[-1] if report.epochs else None
    if final is not None:
        print(
            f"trained {config.epochs} epochs: loss={final.train_loss:.4f}"
            f" val_loss={final.val_loss:.4f} val_f1={final.val_f1:.3f}"
        )
    else:
        print("trained 0 epochs: parameters equal initialization")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    params, config = load_model(args.model)
    manifest = load_corpus(args.test)
    featurizer = make_featurizer(args.features, args.sidecar_dir, args.video_policy)
    x, y = featurize_posts(manifest.records, featurizer.bundle, config.dims)
    scores = np.asarray(forward(params, x))
    pairs = [(float(s), int(t)) for s, t in zip(scores, y)]
    report = evaluate_scores(pairs, threshold=config.threshold)
    _write_json(args.report, report.to_dict())
    if args.roc is not None:
        args.roc.parent.mkdir(parents=True, exist_ok=True)
        args.roc.write_text(roc_csv(pairs))
    print(
        f"P={report.precision:.3f} R={report.recall:.3f}"
        f" F1={report.f1:.3f} AUC={report.auc:.3f}"
    )
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    split = read_split_dir(args.splits)
    config = _fusion_config(args)
    featurizer = make_featurizer(args.features, args.sidecar_dir, args.video_policy)
    results = run_ablation(split, config, featurizer.bundle)
    table = ablation_table(results)
    _write_json(args.out, table)
    if args.roc_dir is not None:
        args.roc_dir.mkdir(parents=True, exist_ok=True)
        for branch, (eval_report, _tr, _params) in results.items():
            name = branch.replace("-", "_") + "_roc.csv"
            lines = ["fpr,tpr"] + [f"{fpr},{tpr}" for fpr, tpr in eval_report.roc_points]
            (args.roc_dir / name).write_text("\n".join(lines) + "\n")
    for row in table["rows"]:
        print(
            f"{row['input']:<12} P={row['precision']:.3f} R={row['recall']:.3f}"
            f" F1={row['f1']:.3f} AUC={row['auc']:.3f}"
        )
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    params, config = load_model(args.model)
    featurizer = make_featurizer(args.features, args.sidecar_dir, args.video_policy)
    entries: list[QueueEntry] = []
    with open(args.input, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            post = post_from_json(obj, base_dir=Path(args.input).parent)
            bundle = featurizer.bundle(post)
            x = concat_features(bundle, config.dims)
            score = float(forward(params, x))
            media = post.media
            snippet = {
                "hashtags": list(post.hashtags),
                "comment": post.comments[0] if post.comments else "",
                "media_kind": media.kind.value,
                "media_ref": (
                    obj.get("media", {}).get("image_path")
                    if media.kind is MediaKind.IMAGE
                    else media.seed if media.kind is MediaKind.VIDEO_PLACEHOLDER else None
                ),
                "contact_channels": obj.get("labels", {}).get("contact_channels", []),
            }
            entries.append(QueueEntry(post_id=post.post_id, score=score, snippet=snippet))
    queue = rank_queue(entries)
    write_queue(queue, args.out)
    print(f"ranked {len(queue)} posts into {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import build_service, create_app

    data_dir = args.data_dir or os.environ.get("LEDGER_DATA_DIR")
    if data_dir is None:
        data_dir = Path(args.queue).parent / "service_data"
    model_path = args.model or os.environ.get("LEDGER_MODEL") or None
    service = build_service(
        queue_path=args.queue,
        data_dir=data_dir,
        model_path=model_path,
        token=args.token,
        featurizer_kind=args.features,
        sidecar_dir=args.sidecar_dir,
        video_policy=args.video_policy,
    )
    app = create_app(service)
    logger.info("serving on %s:%d (queue=%s)", args.host, args.port, args.queue)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "split": _cmd_split,
    "featurize": _cmd_featurize,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "rank": _cmd_rank,
    "serve": _cmd_serve,
}


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --version / --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help()
        return 1
    _setup_logging(getattr(args, "log_level", "INFO"))
    _log_resolved(args)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: file/data/training errors
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
