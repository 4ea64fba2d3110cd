"""Compose relevant vs less-relevant TM retrieval settings for a test domain.

``relevant`` indexes only the pairs whose domain matches the test set.
``less_relevant`` deliberately mismatches: it indexes the pairs of every
*other* domain, merged into a single search pool so BM25 statistics are
global and scores comparable across the contributing TMs.

Scenario indexes must be built from training-side TMs only; never feed test
data in here, or retrieval leaks the references.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .augmentation import AugmentedExample
from .corpus import SentencePair, TranslationMemory
from .errors import ConfigurationError, ValidationError
from .retrieval import Bm25Params, TmIndex, build_index

RELEVANCES = ("relevant", "less_relevant")


@dataclass(frozen=True)
class ScenarioSpec:
    """What was indexed for one (test domain, relevance) setting."""

    test_domain: str
    relevance: str
    tm_sources: tuple[str, ...]
    resolved_domains: frozenset[str]


@dataclass(frozen=True)
class ScenarioValidation:
    """Per-origin-domain suggestion counts plus any domain-exclusion violations."""

    passed: bool
    domain_counts: dict[str, int]
    violations: tuple[tuple[str, str, str], ...]  # (example pair_id, suggestion id, domain)


def build_scenario(
    test_domain: str,
    tms: list[TranslationMemory],
    relevance: str,
    params: Bm25Params = Bm25Params(),
) -> tuple[ScenarioSpec, TmIndex]:
    """Merge the eligible pairs of all TMs and index them for one scenario."""
    if relevance not in RELEVANCES:
        raise ConfigurationError(f"relevance must be one of {RELEVANCES}, got {relevance!r}")
    if not tms:
        raise ConfigurationError("no translation memories given")

    if relevance == "relevant":
        keep = lambda pair: pair.domain == test_domain
    else:
        keep = lambda pair: pair.domain != test_domain

    selected: list[SentencePair] = []
    sources: list[str] = []
    seen_ids: dict[str, str] = {}
    for tm in tms:
        contributed = False
        for pair in tm.pairs:
            if not keep(pair):
                continue
            if pair.id in seen_ids:
                raise ValidationError(
                    f"pair id {pair.id!r} occurs in both {seen_ids[pair.id]!r} and "
                    f"{tm.name!r}; scenario merging requires globally unique ids"
                )
            seen_ids[pair.id] = tm.name
            selected.append(pair)
            contributed = True
        if contributed:
            sources.append(tm.name)

    all_domains = set().union(*(tm.domains for tm in tms))
    if not selected:
        if relevance == "relevant":
            raise ConfigurationError(
                f"domain {test_domain!r} not present in any TM (domains: {sorted(all_domains)})"
            )
        raise ConfigurationError(
            f"no domain other than {test_domain!r} available for a less-relevant scenario"
        )

    merged = TranslationMemory(
        name=f"{relevance}[{test_domain}]",
        pairs=tuple(selected),
    )
    spec = ScenarioSpec(
        test_domain=test_domain,
        relevance=relevance,
        tm_sources=tuple(sources),
        resolved_domains=merged.domains,
    )
    return spec, build_index(merged, params)


def validate_scenario(
    spec: ScenarioSpec, examples: list[AugmentedExample]
) -> ScenarioValidation:
    """Check that no suggestion originates from a domain the scenario excludes.

    Suggestions must carry their origin domain (i.e. come straight from
    retrieval, not from a round-tripped JSONL file).
    """
    counts: dict[str, int] = {}
    violations: list[tuple[str, str, str]] = []
    for example in examples:
        for match in example.suggestions:
            counts[match.domain] = counts.get(match.domain, 0) + 1
            if match.domain not in spec.resolved_domains:
                violations.append((example.pair_id, match.pair_id, match.domain))
    return ScenarioValidation(
        passed=not violations,
        domain_counts=dict(sorted(counts.items())),
        violations=tuple(violations),
    )


def write_scenario_sidecar(spec: ScenarioSpec, index_path: str | Path) -> Path:
    """Drop a JSON audit record next to a scenario's index file."""
    index_path = Path(index_path)
    sidecar = index_path.with_name(index_path.name + ".scenario.json")
    payload = {
        "test_domain": spec.test_domain,
        "relevance": spec.relevance,
        "tm_sources": list(spec.tm_sources),
        "resolved_domains": sorted(spec.resolved_domains),
    }
    with open(sidecar, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
