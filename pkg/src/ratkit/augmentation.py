"""Turn fuzzy-match retrieval results into augmented training/inference examples.

Two modes exist. ``topk`` deterministically keeps the k best matches and is
the usual inference-time setting. ``shuffle`` is the training-time setting:
k suggestions are sampled uniformly without replacement from a larger
candidate pool (default: the top 10 matches), which exposes the model to less
similar suggestions and makes it more robust to irrelevant ones later.

Sampling is keyed per example by (seed, pair id), so the produced corpus does
not depend on iteration order or parallelism, and re-running with the same
seed reproduces it byte for byte. Epoch-level resampling is the trainer's
choice: re-invoke with a different seed to draw a fresh corpus.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import TranslationMemory, write_lines
from .errors import ValidationError
from .retrieval import FuzzyMatch, TmIndex, query_top_n
from .seeding import derived_rng

MODES = ("topk", "shuffle")
DEFAULT_SEPARATOR = "@@SEP@@"
DEFAULT_POOL_SIZE = 10


@dataclass(frozen=True)
class AugmentationConfig:
    """Settings for one augmentation run.

    ``pool_size`` only matters in shuffle mode; ``seed`` only feeds the
    per-example sample draws. ``exclude_self`` keeps the query pair itself
    (and exact source duplicates) out of the suggestions, which is required
    when a training corpus is augmented against its own index. With
    ``sort_by_rank`` (default) sampled suggestions are re-sorted into
    retrieval order before flattening; disable it to keep the random draw
    order.
    """

    k: int
    pool_size: int = DEFAULT_POOL_SIZE
    mode: str = "topk"
    seed: int = 0
    exclude_self: bool = False
    separator: str = DEFAULT_SEPARATOR
    sort_by_rank: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.pool_size < self.k:
            raise ValidationError(
                f"pool_size must be >= k, got pool_size={self.pool_size} k={self.k}"
            )
        if not self.separator or any(ch.isspace() for ch in self.separator):
            raise ValidationError("separator must be non-empty and contain no whitespace")


@dataclass(frozen=True)
class AugmentedExample:
    """A source sentence with its suggestions and the flattened translator input."""

    pair_id: str
    source: str
    reference: str
    suggestions: tuple[FuzzyMatch, ...]
    flat_input: str = field(default="")


def flatten_input(source: str, suggestions: Iterable[FuzzyMatch], separator: str) -> str:
    """``source SEP target1 SEP target2 ...`` joined by single spaces."""
    parts = [source]
    for match in suggestions:
        parts.append(separator)
        parts.append(match.target)
    return " ".join(parts)


def take_top_k(matches: list[FuzzyMatch], k: int) -> list[FuzzyMatch]:
    """First min(k, len) items of a rank-ordered match list."""
    return list(matches[: max(k, 0)])


def sample_suggestions(
    matches: list[FuzzyMatch],
    k: int,
    pool_size: int,
    rng: random.Random,
    sort_by_rank: bool = True,
) -> list[FuzzyMatch]:
    """Uniform without-replacement sample of k suggestions from the top pool.

    The pool is the first min(pool_size, len(matches)) items; when it holds
    fewer than k candidates, all of them are returned. The draw consumes rng
    state deterministically regardless of ``sort_by_rank``.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    pool = matches[:pool_size]
    take = min(k, len(pool))
    picked = rng.sample(pool, take)
    if sort_by_rank:
        picked.sort(key=lambda match: match.rank)
    return picked


def _validate_separator(separator: str, tm: TranslationMemory, index: TmIndex) -> None:
    # Suggestion targets end up inside flat inputs too, so the reserved token
    # must be absent from the index side as well as the corpus being augmented.
    for pair in tm.pairs:
        if separator in pair.source or separator in pair.target:
            raise ValidationError(
                f"separator {separator!r} occurs in corpus pair {pair.id!r}"
            )
    for meta in index.doc_meta:
        if separator in meta.target:
            raise ValidationError(
                f"separator {separator!r} occurs in indexed pair {meta.pair_id!r}"
            )


def augment_corpus(
    tm: TranslationMemory,
    index: TmIndex,
    cfg: AugmentationConfig,
) -> Iterator[AugmentedExample]:
    """Yield one augmented example per pair of ``tm``, in corpus order."""
    _validate_separator(cfg.separator, tm, index)
    n = cfg.pool_size if cfg.mode == "shuffle" else cfg.k
    for pair in tm.pairs:
        exclusions: set[str] = set()
        if cfg.exclude_self:
            exclusions.add(pair.id)
            exclusions.update(index.pairs_with_source(pair.source))
        matches = query_top_n(index, pair.source, n, exclusions)
        if cfg.mode == "shuffle":
            rng = derived_rng(cfg.seed, pair.id)
            suggestions = sample_suggestions(
                matches, cfg.k, cfg.pool_size, rng, sort_by_rank=cfg.sort_by_rank
            )
        else:
            suggestions = take_top_k(matches, cfg.k)
        yield AugmentedExample(
            pair_id=pair.id,
            source=pair.source,
            reference=pair.target,
            suggestions=tuple(suggestions),
            flat_input=flatten_input(pair.source, suggestions, cfg.separator),
        )


def write_augmented(
    examples: Iterable[AugmentedExample], prefix: str | Path
) -> tuple[Path, Path, Path]:
    """Write ``<prefix>.jsonl`` plus the aligned flat-input and reference files."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    jsonl_path = prefix.with_name(prefix.name + ".jsonl")
    flat_path = prefix.with_name(prefix.name + ".flat.txt")
    ref_path = prefix.with_name(prefix.name + ".ref.txt")
    examples = list(examples)
    with open(jsonl_path, "w", encoding="utf-8", newline="\n") as fh:
        for example in examples:
            record = {
                "id": example.pair_id,
                "src": example.source,
                "ref": example.reference,
                "suggestions": [
                    {"id": m.pair_id, "rank": m.rank, "score": m.score, "tgt": m.target}
                    for m in example.suggestions
                ],
                "flat": example.flat_input,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    write_lines((e.flat_input for e in examples), flat_path)
    write_lines((e.reference for e in examples), ref_path)
    return jsonl_path, flat_path, ref_path


def read_augmented(path: str | Path) -> list[AugmentedExample]:
    """Load augmented examples back from a JSONL file.

    The record format stores only (id, rank, score, tgt) per suggestion, so
    reconstructed matches carry empty source and domain fields.
    """
    examples = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read augmented file {path}: {exc}") from exc
    with fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            suggestions = tuple(
                FuzzyMatch(
                    pair_id=s["id"],
                    score=s["score"],
                    rank=s["rank"],
                    source="",
                    target=s["tgt"],
                    domain="",
                )
                for s in record["suggestions"]
            )
            examples.append(
                AugmentedExample(
                    pair_id=record["id"],
                    source=record["src"],
                    reference=record["ref"],
                    suggestions=suggestions,
                    flat_input=record["flat"],
                )
            )
    return examples
