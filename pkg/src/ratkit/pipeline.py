"""End-to-end experiment runner: index, scenario, augment, translate, evaluate.

The translator boundary is file-based: flat inputs go to a temp file, an
external command produces line-aligned outputs, and misalignment is an error.
Built-in baseline translators (passthrough, copy_first, oracle_copy) make the
grid runnable without any model; oracle_copy emulates a maximally
suggestion-reliant system so that scenario quality differences show up in
BLEU without training anything.

Grid cells are independent: each gets its own artifact subdirectory, failures
are recorded per cell without aborting the rest, and the final report JSON is
byte-identical across runs for fixed seeds.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .augmentation import (
    DEFAULT_POOL_SIZE,
    DEFAULT_SEPARATOR,
    MODES,
    AugmentationConfig,
    AugmentedExample,
    augment_corpus,
    write_augmented,
)
from .corpus import TranslationMemory, load_corpus, tokenize_13a, write_lines
from .errors import ConfigurationError, TranslatorError
from .evaluation import (
    CellResult,
    EvalReport,
    GroupAverage,
    SignificanceResult,
    bleu_corpus,
    paired_bootstrap,
    report_to_markdown,
    suggestion_overlap,
)
from .retrieval import Bm25Params, TmIndex, save_index
from .scenarios import RELEVANCES, build_scenario, write_scenario_sidecar
from .seeding import derive_seed

TRANSLATOR_KINDS = (
    "external_command",
    "baseline_passthrough",
    "baseline_copy_first",
    "baseline_oracle_copy",
)

_INPUT_PLACEHOLDER = "{input}"
_OUTPUT_PLACEHOLDER = "{output}"


@dataclass(frozen=True)
class TranslatorSpec:
    """How to turn flat augmented inputs into output translations.

    ``external_command`` runs a shell command template whose {input} and
    {output} placeholders are replaced with temp file paths; the command must
    write exactly one output line per input line. The baseline kinds are pure
    functions of the examples and need no subprocess.
    """

    kind: str
    command: str | None = None
    timeout: float = 300.0

    def __post_init__(self) -> None:
        if self.kind not in TRANSLATOR_KINDS:
            raise ConfigurationError(
                f"unknown translator kind {self.kind!r}; expected one of {TRANSLATOR_KINDS}"
            )
        if self.kind == "external_command":
            if not self.command or not self.command.strip():
                raise ConfigurationError("external_command requires a command template")
            if _INPUT_PLACEHOLDER not in self.command or _OUTPUT_PLACEHOLDER not in self.command:
                raise ConfigurationError(
                    "command template must contain both {input} and {output} placeholders"
                )
        if self.timeout <= 0:
            raise ConfigurationError(f"timeout must be positive, got {self.timeout}")


def _oracle_pick(example: AugmentedExample) -> str:
    reference_types = set(tokenize_13a(example.reference))

    def containment(match) -> float:
        tokens = tokenize_13a(match.target)
        if not tokens:
            return 0.0
        return sum(1 for token in tokens if token in reference_types) / len(tokens)

    best = max(example.suggestions, key=lambda m: (containment(m), -m.rank))
    return best.target


def _run_external(command: str, inputs: list[str], timeout: float) -> list[str]:
    with tempfile.TemporaryDirectory(prefix="ratkit-translate-") as tmp:
        in_path = Path(tmp) / "input.txt"
        out_path = Path(tmp) / "output.txt"
        write_lines(inputs, in_path)
        rendered = command.replace(_INPUT_PLACEHOLDER, shlex.quote(str(in_path)))
        rendered = rendered.replace(_OUTPUT_PLACEHOLDER, shlex.quote(str(out_path)))
        try:
            proc = subprocess.run(
                rendered,
                shell=True,
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            raise TranslatorError(f"translator timed out after {timeout}s: {rendered}")
        if proc.returncode != 0:
            stderr = proc.stderr.strip().splitlines()
            tail = " | ".join(stderr[-5:]) if stderr else "(no stderr)"
            raise TranslatorError(
                f"translator exited with code {proc.returncode}: {rendered}; stderr: {tail}"
            )
        if not out_path.exists():
            raise TranslatorError(f"translator produced no output file: {rendered}")
        outputs = out_path.read_text(encoding="utf-8").splitlines()
    if len(outputs) != len(inputs):
        raise TranslatorError(
            f"translator output line count {len(outputs)} does not match input count {len(inputs)}"
        )
    return outputs


def translate(spec: TranslatorSpec, examples: list[AugmentedExample]) -> list[str]:
    """One output line per example, order preserved.

    passthrough copies the source; copy_first copies the first suggestion
    target (source when there are none); oracle_copy copies the suggestion
    whose 13a token types are best contained in the reference, breaking ties
    toward the lowest retrieval rank.
    """
    if not examples:
        raise TranslatorError("no examples to translate")
    if spec.kind == "baseline_passthrough":
        return [ex.source for ex in examples]
    if spec.kind == "baseline_copy_first":
        return [ex.suggestions[0].target if ex.suggestions else ex.source for ex in examples]
    if spec.kind == "baseline_oracle_copy":
        return [_oracle_pick(ex) if ex.suggestions else ex.source for ex in examples]
    assert spec.command is not None
    return _run_external(spec.command, [ex.flat_input for ex in examples], spec.timeout)


@dataclass(frozen=True)
class BootstrapConfig:
    n_samples: int = 1000
    threshold: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigurationError(f"bootstrap n must be >= 1, got {self.n_samples}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError(
                f"bootstrap threshold must be in (0, 1), got {self.threshold}"
            )


@dataclass(frozen=True)
class ExperimentManifest:
    """Declarative description of one experiment grid.

    ``tms`` are corpus files pooled into the scenario TMs; ``test_sets`` maps
    each test domain to its held-out corpus file. The grid is the cross
    product domains x k_values x scenarios, all run with one translator.
    """

    tms: tuple[Path, ...]
    test_sets: dict[str, Path]
    domains: tuple[str, ...]
    k_values: tuple[int, ...]
    scenarios: tuple[str, ...]
    translator: TranslatorSpec
    out_dir: Path
    mode: str = "topk"
    pool: int = DEFAULT_POOL_SIZE
    seed: int = 0
    separator: str = DEFAULT_SEPARATOR
    exclude_self: bool = False
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    retrieval: Bm25Params = field(default_factory=Bm25Params)

    def __post_init__(self) -> None:
        if not self.tms:
            raise ConfigurationError("manifest lists no TM corpora")
        if not self.domains:
            raise ConfigurationError("manifest lists no test domains")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ConfigurationError(f"k_values must be positive integers, got {self.k_values}")
        if len(set(self.k_values)) != len(self.k_values):
            raise ConfigurationError(f"duplicate k values: {self.k_values}")
        if not self.scenarios:
            raise ConfigurationError("manifest lists no scenarios")
        for scenario in self.scenarios:
            if scenario not in RELEVANCES:
                raise ConfigurationError(
                    f"unknown scenario {scenario!r}; expected one of {RELEVANCES}"
                )
        if len(set(self.scenarios)) != len(self.scenarios):
            raise ConfigurationError(f"duplicate scenarios: {self.scenarios}")
        for domain in self.domains:
            if domain not in self.test_sets:
                raise ConfigurationError(f"domain {domain!r} has no test set in the manifest")
            if not domain or any(c in domain for c in "/\\\n\t"):
                raise ConfigurationError(f"domain name {domain!r} is not filesystem-safe")
        if len(set(self.domains)) != len(self.domains):
            raise ConfigurationError(f"duplicate domains: {self.domains}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown augmentation mode {self.mode!r}")
        if self.mode == "shuffle" and max(self.k_values) > self.pool:
            raise ConfigurationError(
                f"shuffle mode needs pool >= max k; got pool={self.pool}, "
                f"k_values={self.k_values}"
            )

    def cell_config(self, k: int) -> AugmentationConfig:
        # topk ignores the pool, so widen it just enough to satisfy pool >= k
        pool = self.pool if self.mode == "shuffle" else max(self.pool, k)
        return AugmentationConfig(
            k=k,
            pool_size=pool,
            mode=self.mode,
            seed=self.seed,
            exclude_self=self.exclude_self,
            separator=self.separator,
        )


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_manifest(path: str | Path) -> ExperimentManifest:
    """Parse a manifest JSON file; relative paths resolve against its parent."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"manifest {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"manifest {path} must be a JSON object")

    required = ("tms", "test_sets", "domains", "k_values", "scenarios", "translator", "out_dir")
    for key in required:
        if key not in data:
            raise ConfigurationError(f"manifest {path} is missing required field {key!r}")

    base = path.parent
    tms_field = data["tms"]
    if isinstance(tms_field, dict):
        tms = tuple(_resolve(base, v) for _, v in sorted(tms_field.items()))
    elif isinstance(tms_field, list):
        tms = tuple(_resolve(base, v) for v in tms_field)
    else:
        raise ConfigurationError("manifest field 'tms' must be a list or object of paths")
    if not isinstance(data["test_sets"], dict):
        raise ConfigurationError("manifest field 'test_sets' must map domains to paths")
    test_sets = {d: _resolve(base, v) for d, v in data["test_sets"].items()}

    augmentation = data.get("augmentation", {})
    if not isinstance(augmentation, dict):
        raise ConfigurationError("manifest field 'augmentation' must be an object")
    translator_field = data["translator"]
    if not isinstance(translator_field, dict) or "kind" not in translator_field:
        raise ConfigurationError("manifest field 'translator' must be an object with a 'kind'")
    translator = TranslatorSpec(
        kind=translator_field["kind"],
        command=translator_field.get("command"),
        timeout=float(translator_field.get("timeout", 300.0)),
    )
    bootstrap_field = data.get("bootstrap", {})
    bootstrap = BootstrapConfig(
        n_samples=int(bootstrap_field.get("n", 1000)),
        threshold=float(bootstrap_field.get("threshold", 0.05)),
        seed=int(bootstrap_field.get("seed", 0)),
    )
    retrieval_field = data.get("retrieval", {})
    retrieval = Bm25Params(
        k1=float(retrieval_field.get("k1", 1.2)),
        b=float(retrieval_field.get("b", 0.75)),
    )

    return ExperimentManifest(
        tms=tms,
        test_sets=test_sets,
        domains=tuple(data["domains"]),
        k_values=tuple(int(k) for k in data["k_values"]),
        scenarios=tuple(str(s).replace("-", "_") for s in data["scenarios"]),
        translator=translator,
        out_dir=_resolve(base, data["out_dir"]),
        mode=augmentation.get("mode", "topk"),
        pool=int(augmentation.get("pool", DEFAULT_POOL_SIZE)),
        seed=int(augmentation.get("seed", 0)),
        separator=augmentation.get("separator", DEFAULT_SEPARATOR),
        exclude_self=bool(augmentation.get("exclude_self", False)),
        bootstrap=bootstrap,
        retrieval=retrieval,
    )


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


@dataclass
class _CellOutput:
    cell: CellResult
    hypotheses: list[str]
    references: list[str]


def _run_cell(
    manifest: ExperimentManifest,
    domain: str,
    k: int,
    scenario: str,
    index: TmIndex,
    test_corpus: TranslationMemory,
    cell_dir: Path,
) -> _CellOutput:
    cell_dir.mkdir(parents=True, exist_ok=True)
    examples = list(augment_corpus(test_corpus, index, manifest.cell_config(k)))
    write_augmented(examples, cell_dir / "augmented")
    hypotheses = translate(manifest.translator, examples)
    write_lines(hypotheses, cell_dir / "hyp.txt")
    references = [ex.reference for ex in examples]
    bleu = bleu_corpus(hypotheses, references)
    overlap = suggestion_overlap(examples, hypotheses)
    cell = CellResult(
        domain=domain,
        k=k,
        scenario=scenario,
        system=manifest.translator.kind,
        bleu=bleu,
        overlap_pct=overlap.mean_pct,
    )
    cell_json = json.dumps(cell.to_dict(), indent=2, sort_keys=True) + "\n"
    (cell_dir / "cell.json").write_text(cell_json, encoding="utf-8")
    return _CellOutput(cell=cell, hypotheses=hypotheses, references=references)


def _lenient_averages(
    cells: dict[tuple[str, int, str, str], CellResult],
) -> dict[tuple[str, str], GroupAverage]:
    """Group means like aggregate_report, but silently skipping any
    (system, scenario) group whose domain x k grid has holes (failed cells).
    """
    groups: dict[tuple[str, str], list[CellResult]] = {}
    for cell in cells.values():
        groups.setdefault((cell.system, cell.scenario), []).append(cell)
    averages: dict[tuple[str, str], GroupAverage] = {}
    for key, group in groups.items():
        domains = {c.domain for c in group}
        ks = {c.k for c in group}
        if len(group) != len(domains) * len(ks):
            continue
        overlaps = [c.overlap_pct for c in group if c.overlap_pct is not None]
        averages[key] = GroupAverage(
            bleu=sum(c.bleu.score for c in group) / len(group),
            overlap_pct=sum(overlaps) / len(overlaps) if overlaps else None,
        )
    return averages


def run_experiment(manifest: ExperimentManifest, workers: int = 1) -> EvalReport:
    """Run the full domain x k x scenario grid and persist every artifact.

    Per cell: scenario index, augmented files, hypothesis file, cell.json.
    Per (domain, k): a paired bootstrap between the relevant and
    less_relevant hypotheses when both cells succeeded. Failures are recorded
    per cell and never abort the rest of the grid. Writes report.json and
    report.md under out_dir; report.json is byte-stable for fixed seeds.
    """
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")
    out_dir = manifest.out_dir
    (out_dir / "cells").mkdir(parents=True, exist_ok=True)
    (out_dir / "indexes").mkdir(parents=True, exist_ok=True)

    tm_error: str | None = None
    tms: list[TranslationMemory] = []
    try:
        tms = [load_corpus(p) for p in manifest.tms]
    except Exception as exc:
        tm_error = _error_text(exc)

    test_corpora: dict[str, TranslationMemory] = {}
    test_errors: dict[str, str] = {}
    for domain in manifest.domains:
        try:
            test_corpora[domain] = load_corpus(manifest.test_sets[domain], name=f"test[{domain}]")
        except Exception as exc:
            test_errors[domain] = _error_text(exc)

    indexes: dict[tuple[str, str], TmIndex] = {}
    index_errors: dict[tuple[str, str], str] = {}
    if tm_error is None:
        for domain in manifest.domains:
            for scenario in manifest.scenarios:
                try:
                    spec, index = build_scenario(domain, tms, scenario, manifest.retrieval)
                    indexes[(domain, scenario)] = index
                    index_path = out_dir / "indexes" / f"{domain}__{scenario}.idx"
                    save_index(index, index_path)
                    write_scenario_sidecar(spec, index_path)
                except Exception as exc:
                    index_errors[(domain, scenario)] = _error_text(exc)

    cells: dict[tuple[str, int, str, str], CellResult] = {}
    outputs: dict[tuple[str, int, str], _CellOutput] = {}
    failed: dict[tuple[str, int, str, str], str] = {}
    system = manifest.translator.kind

    jobs = []
    for domain in manifest.domains:
        for k in manifest.k_values:
            for scenario in manifest.scenarios:
                key = (domain, k, scenario, system)
                if tm_error is not None:
                    failed[key] = tm_error
                elif domain in test_errors:
                    failed[key] = test_errors[domain]
                elif (domain, scenario) in index_errors:
                    failed[key] = index_errors[(domain, scenario)]
                else:
                    jobs.append((domain, k, scenario))

    def run_one(job: tuple[str, int, str]) -> tuple[tuple[str, int, str], _CellOutput]:
        domain, k, scenario = job
        cell_dir = out_dir / "cells" / f"{domain}__k{k}__{scenario}"
        result = _run_cell(
            manifest,
            domain,
            k,
            scenario,
            indexes[(domain, scenario)],
            test_corpora[domain],
            cell_dir,
        )
        return job, result

    if workers == 1:
        futures = map(run_one, jobs)
        for job in jobs:
            try:
                _, result = next(futures)
            except Exception as exc:
                failed[(job[0], job[1], job[2], system)] = _error_text(exc)
                continue
            outputs[job] = result
            cells[result.cell.key] = result.cell
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            future_by_job = {job: pool.submit(run_one, job) for job in jobs}
        for job, future in future_by_job.items():
            try:
                _, result = future.result()
            except Exception as exc:
                failed[(job[0], job[1], job[2], system)] = _error_text(exc)
                continue
            outputs[job] = result
            cells[result.cell.key] = result.cell

    significance: dict[tuple[str, int, str, str, str], SignificanceResult] = {}
    if "relevant" in manifest.scenarios and "less_relevant" in manifest.scenarios:
        for domain in manifest.domains:
            for k in manifest.k_values:
                side_a = outputs.get((domain, k, "relevant"))
                side_b = outputs.get((domain, k, "less_relevant"))
                if side_a is None or side_b is None:
                    continue
                result = paired_bootstrap(
                    side_a.hypotheses,
                    side_b.hypotheses,
                    side_a.references,
                    n_samples=manifest.bootstrap.n_samples,
                    threshold=manifest.bootstrap.threshold,
                    seed=derive_seed(manifest.bootstrap.seed, domain, k, system),
                )
                significance[(domain, k, system, "relevant", "less_relevant")] = result

    report = EvalReport(
        cells=cells,
        averages=_lenient_averages(cells),
        significance=significance,
        failed=failed,
    )
    report_json = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    (out_dir / "report.json").write_text(report_json, encoding="utf-8")
    (out_dir / "report.md").write_text(report_to_markdown(report), encoding="utf-8")
    return report
