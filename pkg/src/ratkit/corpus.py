"""Parallel corpus / translation memory ingestion and the toolkit's tokenizations.

Two distinct analyzers live here and must not be confused:

* :func:`analyze_for_index` feeds the BM25 retrieval index. It is a simple
  deterministic approximation of a search engine's default text analyzer
  (lowercase, whitespace split, edge punctuation stripped).
* :func:`tokenize_13a` implements the language-independent mteval-v13a rules
  used for BLEU scoring. Case is preserved.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import CorpusFormatError, ValidationError

CORPUS_FORMATS = ("jsonl", "tsv")

# TSV column order is fixed; files carry no header.
_TSV_COLUMNS = ("id", "domain", "source", "target")


@dataclass(frozen=True)
class SentencePair:
    """One aligned sentence pair with a domain label."""

    id: str
    source: str
    target: str
    domain: str

    def __post_init__(self):
        if not self.id:
            raise ValidationError("sentence pair has an empty id")
        if not self.source.strip():
            raise ValidationError(f"pair {self.id!r}: source is empty")
        if not self.target.strip():
            raise ValidationError(f"pair {self.id!r}: target is empty")
        # Sentences flow into line-aligned files later; embedded line breaks
        # would silently shift the alignment, so reject them at the door.
        for label, value in (
            ("id", self.id),
            ("domain", self.domain),
            ("source", self.source),
            ("target", self.target),
        ):
            if "\n" in value or "\r" in value:
                raise ValidationError(f"pair {self.id!r}: {label} contains a line break")


@dataclass(frozen=True)
class TranslationMemory:
    """A named, ordered collection of sentence pairs with unique ids."""

    name: str
    pairs: tuple[SentencePair, ...]
    domains: frozenset[str] = field(init=False)

    def __post_init__(self):
        if not self.pairs:
            raise ValidationError(f"translation memory {self.name!r} is empty")
        seen: set[str] = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise ValidationError(
                    f"translation memory {self.name!r}: duplicate pair id {pair.id!r}"
                )
            seen.add(pair.id)
        object.__setattr__(self, "domains", frozenset(p.domain for p in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def _detect_format(path: Path) -> str:
    suffix = path.suffix.lower().lstrip(".")
    if suffix in CORPUS_FORMATS:
        return suffix
    raise ValidationError(
        f"cannot infer corpus format from {path.name!r}; pass format='jsonl' or 'tsv'"
    )


def load_corpus(path: str | Path, format: str | None = None, name: str | None = None) -> TranslationMemory:
    """Load a translation memory from a JSONL or TSV file.

    JSONL records look like ``{"id": ..., "domain": ..., "src": ..., "tgt": ...}``,
    one object per line. TSV rows carry four tab-separated columns in the order
    (id, domain, source, target), no header. Record order is preserved.
    """
    path = Path(path)
    fmt = format or _detect_format(path)
    if fmt not in CORPUS_FORMATS:
        raise ValidationError(f"unknown corpus format {fmt!r}")

    pairs: list[SentencePair] = []
    seen: dict[str, int] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            pair = _parse_record(str(path), lineno, line.rstrip("\n"), fmt)
            if pair.id in seen:
                raise CorpusFormatError(
                    str(path),
                    lineno,
                    f"duplicate id {pair.id!r} (first seen on line {seen[pair.id]})",
                )
            seen[pair.id] = lineno
            pairs.append(pair)
    if not pairs:
        raise ValidationError(f"corpus file {path} contains no records")
    return TranslationMemory(name=name or path.stem, pairs=tuple(pairs))


def _parse_record(path: str, lineno: int, line: str, fmt: str) -> SentencePair:
    if fmt == "jsonl":
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(path, lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise CorpusFormatError(path, lineno, "record is not a JSON object")
        fields = {}
        for key, attr in (("id", "id"), ("domain", "domain"), ("src", "source"), ("tgt", "target")):
            value = record.get(key)
            if not isinstance(value, str):
                raise CorpusFormatError(path, lineno, f"missing or non-string field {key!r}")
            fields[attr] = value
    else:
        columns = line.split("\t")
        if len(columns) != len(_TSV_COLUMNS):
            raise CorpusFormatError(
                path, lineno, f"expected {len(_TSV_COLUMNS)} tab-separated columns, got {len(columns)}"
            )
        fields = dict(zip(_TSV_COLUMNS, columns))
    try:
        return SentencePair(**fields)
    except ValidationError as exc:
        raise CorpusFormatError(path, lineno, str(exc)) from exc


def save_corpus(tm: TranslationMemory, path: str | Path, format: str | None = None) -> None:
    """Write a translation memory back to disk. Inverse of :func:`load_corpus`."""
    path = Path(path)
    fmt = format or _detect_format(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in tm.pairs:
            if fmt == "jsonl":
                record = {"id": pair.id, "domain": pair.domain, "src": pair.source, "tgt": pair.target}
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            else:
                cells = (pair.id, pair.domain, pair.source, pair.target)
                if any("\t" in cell or "\n" in cell for cell in cells):
                    raise ValidationError(
                        f"pair {pair.id!r} contains a tab or newline; use the jsonl format"
                    )
                fh.write("\t".join(cells) + "\n")


def _strip_edge_punctuation(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def analyze_for_index(text: str) -> list[str]:
    """Terms for retrieval: lowercase, split on whitespace, strip edge punctuation.

    Internal punctuation (hyphens, apostrophes) is preserved; tokens that are
    punctuation-only disappear. Idempotent over its own space-joined output.
    """
    terms = []
    for token in text.lower().split():
        stripped = _strip_edge_punctuation(token)
        if stripped:
            terms.append(stripped)
    return terms


# mteval-v13a text normalization, language-independent rules plus the Western-
# language punctuation treatment. The regexes are kept byte-for-byte compatible
# with the standard scorers so that token sequences (and therefore BLEU) agree.
_13A_SYMBOLS = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DIGIT_DASH = re.compile(r"([0-9])(-)")
_13A_SPACES = re.compile(r"\s+")


def tokenize_13a(text: str) -> list[str]:
    """Tokenize for BLEU with the mteval-v13a rules; case is preserved."""
    norm = text
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")

    norm = f" {norm} "
    norm = _13A_SYMBOLS.sub(r" \1 ", norm)
    norm = _13A_PERIOD_BEFORE.sub(r"\1 \2 ", norm)
    norm = _13A_PERIOD_AFTER.sub(r" \1 \2", norm)
    norm = _13A_DIGIT_DASH.sub(r"\1 \2 ", norm)
    norm = _13A_SPACES.sub(" ", norm)
    return norm.strip().split()


def read_lines(path: str | Path) -> list[str]:
    """Read a line-aligned text file, dropping the trailing newline of each line."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with fh:
        return [line.rstrip("\n") for line in fh]


def write_lines(lines: Iterable[str], path: str | Path) -> None:
    """Write one string per line with LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
