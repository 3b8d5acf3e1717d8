"""Command-line front end.

Every subcommand operates on a workspace directory (--workspace flag, or
the TAXOFORGE_WORKSPACE environment variable, or the current directory).
Exit codes: 0 success, 1 usage error, 2 data error. Output files are
written atomically; all randomized steps take an explicit --seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from taxoforge.embedding import EmbeddingConfig, train
from taxoforge.errors import TaxoforgeError
from taxoforge.evaluation import (
    PrecisionStrategy,
    export_projection,
    reference_precision,
    subtree_similarity,
    write_projection,
)
from taxoforge.expansion import attach_by_embedding, bootstrap_seed, load_phrase_list, load_seed_file
from taxoforge.link_pruning import (
    fit_reference_scorer,
    generate_pairs,
    load_pairs,
    prune_and_reattach,
    save_pairs,
)
from taxoforge.recommender import baseline_candidates, taxonomy_candidates
from taxoforge.taxonomy import TaxonomyStats
from taxoforge.workspace import ENV_WORKSPACE, Workspace, save_scorer

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _stats_table(stats: TaxonomyStats) -> str:
    header = ["# Nodes", "# Edges", "# Parents", "# Leaf Nodes", "Max Depth"]
    values = [stats.num_nodes, stats.num_edges, stats.num_parents, stats.num_leaves, stats.max_depth]
    return "\t".join(header) + "\n" + "\t".join(str(v) for v in values)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="taxoforge", description=__doc__)
    parser.add_argument(
        "--workspace",
        default=None,
        help=f"workspace directory (default: ${ENV_WORKSPACE} or the current directory)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bootstrap", help="build the seed taxonomy from a seed file")
    p.add_argument("--seed-file", required=True)

    p = sub.add_parser("train-embeddings", help="train the subword skip-gram model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr0", type=float, default=0.05)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--ngram-min", type=int, default=3)
    p.add_argument("--ngram-max", type=int, default=6)
    p.add_argument("--buckets", type=int, default=262144)
    p.add_argument("--subsample-t", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("expand", help="attach new phrases under nearest categories")
    p.add_argument("--phrases", required=True, help="file with one phrase per line")
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("gen-pairs", help="generate labeled link samples")
    p.add_argument("--out", required=True)
    p.add_argument("--negatives-per-positive", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train-scorer", help="fit the logistic reference scorer")
    p.add_argument("--pairs", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("prune", help="prune invalid edges and reattach children")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--include-top-level", action="store_true",
                   help="also score edges whose parent is the root")

    p = sub.add_parser("suggest", help="queue scored edge suggestions for new phrases")
    p.add_argument("--phrases", required=True)
    p.add_argument("--top-k", type=int, default=1)

    p = sub.add_parser("review", help="list or decide pending suggestions")
    action = p.add_subparsers(dest="action", required=True)
    action.add_parser("list")
    ap = action.add_parser("approve")
    ap.add_argument("id", type=int)
    ap.add_argument("--note", default=None)
    rp = action.add_parser("reject")
    rp.add_argument("id", type=int)
    rp.add_argument("--note", default=None)

    sub.add_parser("stats", help="print taxonomy statistics")

    p = sub.add_parser("eval-precision", help="reference-ontology precision")
    p.add_argument("--strategy", choices=[s.value for s in PrecisionStrategy], required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval-subtree", help="mean pairwise cosine within a subtree")
    p.add_argument("--node", type=int, required=True)

    p = sub.add_parser("export-projection", help="2-D principal-component export")
    p.add_argument("--out", required=True)
    p.add_argument("--group-depth", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("recommend", help="candidate listings for a query")
    p.add_argument("--query", required=True)
    p.add_argument("--method", choices=["baseline", "taxonomy"], default="taxonomy")
    p.add_argument("--resolution", type=int, default=1)
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def _run(args: argparse.Namespace) -> int:
    root = args.workspace or os.environ.get(ENV_WORKSPACE) or "."
    workspace = Workspace.open(root)
    cfg = workspace.config
    command = args.command

    if command == "bootstrap":
        records = load_seed_file(args.seed_file)
        workspace.taxonomy = bootstrap_seed(records)
        workspace.save_taxonomy()
        print(_stats_table(workspace.taxonomy.stats()))

    elif command == "train-embeddings":
        config = EmbeddingConfig(
            dim=args.dim,
            window=args.window,
            negatives=args.negatives,
            epochs=args.epochs,
            lr0=args.lr0,
            min_count=args.min_count,
            ngram_min=args.ngram_min,
            ngram_max=args.ngram_max,
            buckets=args.buckets,
            subsample_t=args.subsample_t,
            seed=args.seed,
        )
        model = train(args.corpus, config)
        model.save(cfg.model_path)
        print(f"trained {model.vocab_size} words -> {cfg.model_path}")

    elif command == "expand":
        alpha = cfg.alpha if args.alpha is None else args.alpha
        phrases = load_phrase_list(args.phrases)
        report = attach_by_embedding(workspace.require_taxonomy(), workspace.model, phrases, alpha)
        workspace.save_taxonomy()
        print(
            f"attached={len(report.attached)} skipped={len(report.skipped)} "
            f"pre_existing={len(report.pre_existing)} alpha={alpha:g}"
        )

    elif command == "gen-pairs":
        samples = generate_pairs(
            workspace.require_taxonomy(), args.negatives_per_positive, seed=args.seed
        )
        save_pairs(samples, args.out)
        positives = sum(1 for s in samples if s.label == 1)
        print(f"wrote {len(samples)} pairs ({positives} positive) -> {args.out}")

    elif command == "train-scorer":
        samples = load_pairs(args.pairs)
        scorer = fit_reference_scorer(
            samples,
            workspace.model_if_present,
            epochs=args.epochs,
            lr=args.lr,
            seed=args.seed,
            taxonomy=workspace.taxonomy,
        )
        save_scorer(scorer, cfg.scorer_path)
        print(f"trained scorer on {len(samples)} pairs -> {cfg.scorer_path}")

    elif command == "prune":
        threshold = cfg.prune_threshold if args.threshold is None else args.threshold
        report = prune_and_reattach(
            workspace.require_taxonomy(),
            workspace.scorer,
            workspace.model_if_present,
            threshold=threshold,
            exempt_top_level=not args.include_top_level,
        )
        workspace.save_taxonomy()
        print(report.to_text(), end="")

    elif command == "suggest":
        phrases = load_phrase_list(args.phrases)
        created = workspace.suggest_batch(phrases, top_k=args.top_k)
        for s in created:
            parent = workspace.taxonomy.node(s.proposed_parent).label
            print(f"{s.id}\t{s.child_label}\t{parent}\t{s.score:.6f}")
        print(f"queued {len(created)} suggestions")

    elif command == "review":
        if args.action == "list":
            for s in workspace.by_status("pending"):
                parent = workspace.require_taxonomy().node(s.proposed_parent).label
                flag = " low_confidence" if s.low_confidence else ""
                print(f"{s.id}\t{s.child_label}\t{parent}\t{s.score:.6f}{flag}")
        else:
            try:
                suggestion = workspace.decide(
                    args.id, "approve" if args.action == "approve" else "reject", note=args.note
                )
            except KeyError as exc:
                raise TaxoforgeError(str(exc)) from exc
            print(f"{suggestion.id} {suggestion.status.value}")

    elif command == "stats":
        print(_stats_table(workspace.require_taxonomy().stats()))

    elif command == "eval-precision":
        strategy = PrecisionStrategy(args.strategy)
        model = (
            workspace.model
            if strategy is PrecisionStrategy.EMBEDDING_SIMILARITY
            else workspace.model_if_present
        )
        report = reference_precision(
            workspace.require_taxonomy(), workspace.reference, model, strategy, seed=args.seed
        )
        print(
            f"strategy={report.strategy.value} numerator={report.numerator} "
            f"denominator={report.denominator} precision={report.precision:.4f}"
        )

    elif command == "eval-subtree":
        score, size = subtree_similarity(workspace.require_taxonomy(), workspace.model, args.node)
        label = workspace.taxonomy.node(args.node).label
        print(f"subtree={label} score={score:.4f} size={size}")

    elif command == "export-projection":
        result = export_projection(
            workspace.require_taxonomy(), workspace.model, args.group_depth, seed=args.seed
        )
        write_projection(result, args.out)
        note = " (rank deficient)" if result.rank_deficient else ""
        print(f"wrote {len(result.rows)} points -> {args.out}{note}")

    elif command == "recommend":
        if args.method == "baseline":
            result = baseline_candidates(workspace.listings, args.query)
        else:
            alpha = cfg.alpha if args.alpha is None else args.alpha
            result = taxonomy_candidates(
                workspace.listings,
                workspace.require_taxonomy(),
                workspace.model_if_present,
                args.query,
                r=args.resolution,
                alpha=alpha,
            )
        import json

        print(json.dumps(result.to_record(), ensure_ascii=False))

    elif command == "serve":
        import uvicorn

        from taxoforge.server import create_app

        port = cfg.port if args.port is None else args.port
        uvicorn.run(create_app(workspace), host=args.host, port=port, log_level="info")

    else:  # pragma: no cover - argparse enforces choices
        raise AssertionError(command)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args)
    except TaxoforgeError as exc:
        print(f"taxoforge: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"taxoforge: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
