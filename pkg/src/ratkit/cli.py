"""Command-line front end.

Subcommands mirror the pipeline stages: ``index`` builds a BM25 index from a
corpus file, ``scenario`` builds a relevance-filtered index, ``augment``
attaches retrieved suggestions to a corpus, ``bleu``/``overlap``/``compare``
score outputs, ``report`` aggregates per-cell JSON files, and ``run``
executes a whole manifest grid.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .augmentation import (
    DEFAULT_POOL_SIZE,
    DEFAULT_SEPARATOR,
    MODES,
    AugmentationConfig,
    augment_corpus,
    read_augmented,
    write_augmented,
)
from .corpus import load_corpus, read_lines
from .errors import RatkitError
from .evaluation import (
    CellResult,
    aggregate_report,
    bleu_corpus,
    paired_bootstrap,
    report_to_markdown,
    suggestion_overlap,
)
from .pipeline import load_manifest, run_experiment
from .retrieval import Bm25Params, build_index, load_index, save_index
from .scenarios import build_scenario, write_scenario_sidecar


def _format_bleu(score) -> str:
    precisions = "/".join(f"{100.0 * p:.1f}" for p in score.precisions)
    return (
        f"BLEU = {score.score:.2f} {precisions} "
        f"(BP = {score.brevity_penalty:.3f} hyp_len = {score.hyp_length} "
        f"ref_len = {score.ref_length})"
    )


def _cmd_index(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    index = build_index(corpus, Bm25Params(k1=args.k1, b=args.b))
    save_index(index, args.out)
    print(
        f"indexed {index.doc_count} pairs, {len(index.postings)} terms, "
        f"avg doc length {index.avg_doc_length:.2f} -> {args.out}"
    )
    return 0


def _cmd_scenario(args: argparse.Namespace) -> int:
    tms = [load_corpus(Path(p)) for p in args.tms.split(",") if p]
    relevance = args.relevance.replace("-", "_")
    spec, index = build_scenario(args.test_domain, tms, relevance, Bm25Params(args.k1, args.b))
    save_index(index, args.out)
    sidecar = write_scenario_sidecar(spec, args.out)
    print(
        f"{relevance} scenario for {args.test_domain!r}: {index.doc_count} pairs from "
        f"domains {sorted(spec.resolved_domains)} -> {args.out} (sidecar {sidecar})"
    )
    return 0


def _cmd_augment(args: argparse.Namespace) -> int:
    index = load_index(args.index)
    corpus = load_corpus(args.corpus)
    config = AugmentationConfig(
        k=args.k,
        pool_size=max(args.pool, args.k) if args.mode == "topk" else args.pool,
        mode=args.mode,
        seed=args.seed,
        exclude_self=args.exclude_self,
        separator=args.separator,
    )
    examples = list(augment_corpus(corpus, index, config))
    paths = write_augmented(examples, args.out)
    print(f"augmented {len(examples)} examples -> " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_bleu(args: argparse.Namespace) -> int:
    score = bleu_corpus(read_lines(args.hyp), read_lines(args.ref))
    print(_format_bleu(score))
    return 0


def _cmd_overlap(args: argparse.Namespace) -> int:
    examples = read_augmented(args.augmented)
    result = suggestion_overlap(
        examples, read_lines(args.hyp), counting=args.counting, average=args.average
    )
    skipped = sum(1 for f in result.fractions if f is None)
    if result.mean_pct is None:
        print(f"overlap undefined: all {len(examples)} sentences lack suggestion tokens")
    else:
        print(
            f"overlap = {result.mean_pct:.2f}% over {len(examples) - skipped} sentences "
            f"({skipped} skipped)"
        )
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    result = paired_bootstrap(
        read_lines(args.hyp_a),
        read_lines(args.hyp_b),
        read_lines(args.ref),
        n_samples=args.bootstrap,
        threshold=args.p_thresh,
        seed=args.seed,
    )
    verdict = "significant" if result.significant else "not significant"
    print(
        f"delta = {result.observed_delta:+.4f} p = {result.p_value:.4f} "
        f"(wins_a = {result.wins_a}, wins_b = {result.wins_b}, ties = {result.ties}, "
        f"n = {result.n_samples}): {verdict} at {args.p_thresh}"
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    cell_files = sorted(Path(args.cells).glob("**/cell.json"))
    if not cell_files:
        print(f"error: no cell.json files under {args.cells}", file=sys.stderr)
        return 2
    cells = [CellResult.from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in cell_files]
    report = aggregate_report(cells)
    out = Path(args.out)
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.markdown:
        Path(args.markdown).write_text(report_to_markdown(report), encoding="utf-8")
    print(f"aggregated {len(cells)} cells -> {out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    report = run_experiment(manifest, workers=args.workers)
    done = len(report.cells)
    print(f"{done} cells completed, {len(report.failed)} failed -> {manifest.out_dir}")
    for key, error in sorted(report.failed.items()):
        print(f"failed {key}: {error}", file=sys.stderr)
    return 0 if not report.failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratkit",
        description="Retrieval-augmented translation toolkit: fuzzy-match "
        "retrieval, suggestion augmentation, and BLEU evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build a BM25 index from a corpus file")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("scenario", help="build a relevance-filtered scenario index")
    p.add_argument("--test-domain", required=True)
    p.add_argument(
        "--relevance", required=True, choices=["relevant", "less-relevant", "less_relevant"]
    )
    p.add_argument("--tms", required=True, help="comma-separated corpus files")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("augment", help="attach retrieved suggestions to a corpus")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--mode", choices=list(MODES), default="topk")
    p.add_argument("--k", required=True, type=int)
    p.add_argument("--pool", type=int, default=DEFAULT_POOL_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separator", default=DEFAULT_SEPARATOR)
    p.add_argument("--exclude-self", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--out", required=True, type=Path, help="output path prefix")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("bleu", help="corpus BLEU of a hypothesis file against a reference file")
    p.add_argument("--hyp", required=True, type=Path)
    p.add_argument("--ref", required=True, type=Path)
    p.set_defaults(func=_cmd_bleu)

    p = sub.add_parser("overlap", help="suggestion token overlap of outputs")
    p.add_argument("--augmented", required=True, type=Path)
    p.add_argument("--hyp", required=True, type=Path)
    p.add_argument("--counting", choices=["type", "clipped"], default="type")
    p.add_argument("--average", choices=["sentence", "corpus"], default="sentence")
    p.set_defaults(func=_cmd_overlap)

    p = sub.add_parser("compare", help="paired bootstrap significance between two systems")
    p.add_argument("--hyp-a", required=True, type=Path)
    p.add_argument("--hyp-b", required=True, type=Path)
    p.add_argument("--ref", required=True, type=Path)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--p-thresh", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="aggregate per-cell results into a report")
    p.add_argument("--cells", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--markdown", type=Path, default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("run", help="run a full experiment manifest")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RatkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
