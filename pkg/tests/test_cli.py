"""Command-line interface: every subcommand end to end over temp files."""

from __future__ import annotations

import json

import pytest

from ratkit import load_index, read_augmented, save_corpus, write_lines
from ratkit.cli import main

from synthetic import make_three_domain, tiny_tm


@pytest.fixture()
def corpus_files(tmp_path):
    tm, test_sets = make_three_domain(tm_per_domain=25, test_per_domain=15)
    save_corpus(tm, tmp_path / "tm.jsonl")
    for domain, tests in test_sets.items():
        save_corpus(tests, tmp_path / f"test_{domain}.jsonl")
    return tmp_path


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


class TestIndexCommand:
    def test_builds_loadable_index(self, corpus_files, capsys):
        out = corpus_files / "tm.idx"
        code = run_cli("index", "--corpus", corpus_files / "tm.jsonl", "--out", out)
        assert code == 0
        assert "indexed 75 pairs" in capsys.readouterr().out
        index = load_index(out)
        assert index.doc_count == 75
        assert index.params.k1 == 1.2

    def test_custom_bm25_params_stored(self, corpus_files):
        out = corpus_files / "tm.idx"
        run_cli("index", "--corpus", corpus_files / "tm.jsonl", "--out", out,
                "--k1", "0.9", "--b", "0.4")
        index = load_index(out)
        assert (index.params.k1, index.params.b) == (0.9, 0.4)

    def test_missing_corpus_exits_2(self, corpus_files, capsys):
        code = run_cli("index", "--corpus", corpus_files / "nope.jsonl",
                       "--out", corpus_files / "x.idx")
        assert code == 2
        assert capsys.readouterr().err.startswith("error:")


class TestScenarioCommand:
    def test_relevant_scenario_with_sidecar(self, corpus_files, capsys):
        out = corpus_files / "it_rel.idx"
        code = run_cli("scenario", "--test-domain", "it", "--relevance", "relevant",
                       "--tms", corpus_files / "tm.jsonl", "--out", out)
        assert code == 0
        assert "relevant scenario for 'it': 25 pairs" in capsys.readouterr().out
        assert load_index(out).doc_count == 25
        sidecar = json.loads((corpus_files / "it_rel.idx.scenario.json").read_text())
        assert sidecar["test_domain"] == "it"
        assert sidecar["resolved_domains"] == ["it"]

    def test_hyphenated_relevance_accepted(self, corpus_files):
        out = corpus_files / "it_less.idx"
        code = run_cli("scenario", "--test-domain", "it", "--relevance", "less-relevant",
                       "--tms", corpus_files / "tm.jsonl", "--out", out)
        assert code == 0
        assert load_index(out).doc_count == 50
        sidecar = json.loads((corpus_files / "it_less.idx.scenario.json").read_text())
        assert sidecar["relevance"] == "less_relevant"
        assert sidecar["resolved_domains"] == ["law", "med"]

    def test_unknown_domain_exits_2(self, corpus_files, capsys):
        code = run_cli("scenario", "--test-domain", "finance", "--relevance", "relevant",
                       "--tms", corpus_files / "tm.jsonl", "--out", corpus_files / "x.idx")
        assert code == 2
        assert "finance" in capsys.readouterr().err


class TestAugmentCommand:
    def test_writes_three_aligned_files(self, corpus_files, capsys):
        idx = corpus_files / "it_rel.idx"
        run_cli("scenario", "--test-domain", "it", "--relevance", "relevant",
                "--tms", corpus_files / "tm.jsonl", "--out", idx)
        code = run_cli("augment", "--index", idx, "--corpus", corpus_files / "test_it.jsonl",
                       "--k", "2", "--out", corpus_files / "aug")
        assert code == 0
        assert "augmented 15 examples" in capsys.readouterr().out
        examples = read_augmented(corpus_files / "aug.jsonl")
        assert len(examples) == 15
        assert all(len(ex.suggestions) == 2 for ex in examples)
        flat = (corpus_files / "aug.flat.txt").read_text().splitlines()
        refs = (corpus_files / "aug.ref.txt").read_text().splitlines()
        assert len(flat) == len(refs) == 15
        assert flat == [ex.flat_input for ex in examples]

    def test_shuffle_mode_seed_controls_output(self, corpus_files):
        idx = corpus_files / "it_rel.idx"
        run_cli("scenario", "--test-domain", "it", "--relevance", "relevant",
                "--tms", corpus_files / "tm.jsonl", "--out", idx)
        base = ["augment", "--index", idx, "--corpus", corpus_files / "test_it.jsonl",
                "--k", "2", "--mode", "shuffle", "--pool", "6"]
        run_cli(*base, "--seed", "1", "--out", corpus_files / "s1")
        run_cli(*base, "--seed", "1", "--out", corpus_files / "s1b")
        run_cli(*base, "--seed", "2", "--out", corpus_files / "s2")
        first = (corpus_files / "s1.jsonl").read_bytes()
        assert (corpus_files / "s1b.jsonl").read_bytes() == first
        assert (corpus_files / "s2.jsonl").read_bytes() != first


class TestBleuCommand:
    def test_identity_prints_100(self, tmp_path, capsys):
        lines = ["der Hund bellt heute laut", "die Katze schläft"]
        write_lines(lines, tmp_path / "hyp.txt")
        write_lines(lines, tmp_path / "ref.txt")
        code = run_cli("bleu", "--hyp", tmp_path / "hyp.txt", "--ref", tmp_path / "ref.txt")
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("BLEU = 100.00 100.0/100.0/100.0/100.0 (BP = 1.000")
        assert "hyp_len = 8 ref_len = 8" in out

    def test_length_mismatch_exits_2(self, tmp_path, capsys):
        write_lines(["a", "b"], tmp_path / "hyp.txt")
        write_lines(["a"], tmp_path / "ref.txt")
        code = run_cli("bleu", "--hyp", tmp_path / "hyp.txt", "--ref", tmp_path / "ref.txt")
        assert code == 2
        assert "mismatch" in capsys.readouterr().err


class TestOverlapCommand:
    def prepare(self, corpus_files):
        idx = corpus_files / "it_rel.idx"
        run_cli("scenario", "--test-domain", "it", "--relevance", "relevant",
                "--tms", corpus_files / "tm.jsonl", "--out", idx)
        run_cli("augment", "--index", idx, "--corpus", corpus_files / "test_it.jsonl",
                "--k", "1", "--out", corpus_files / "aug")
        return read_augmented(corpus_files / "aug.jsonl")

    def test_copying_the_suggestion_scores_100(self, corpus_files, capsys):
        examples = self.prepare(corpus_files)
        write_lines([ex.suggestions[0].target for ex in examples], corpus_files / "hyp.txt")
        capsys.readouterr()
        code = run_cli("overlap", "--augmented", corpus_files / "aug.jsonl",
                       "--hyp", corpus_files / "hyp.txt")
        assert code == 0
        assert "overlap = 100.00% over 15 sentences (0 skipped)" in capsys.readouterr().out

    def test_no_suggestions_reports_undefined(self, tmp_path, capsys):
        save_corpus(tiny_tm(), tmp_path / "tiny.jsonl")
        run_cli("index", "--corpus", tmp_path / "tiny.jsonl", "--out", tmp_path / "tiny.idx")
        strangers = tmp_path / "strangers.jsonl"
        strangers.write_text(
            json.dumps({"id": "q1", "domain": "a", "src": "zzzz qqqq", "tgt": "x"}) + "\n"
        )
        run_cli("augment", "--index", tmp_path / "tiny.idx", "--corpus", strangers,
                "--k", "1", "--out", tmp_path / "aug")
        write_lines(["x"], tmp_path / "hyp.txt")
        capsys.readouterr()
        code = run_cli("overlap", "--augmented", tmp_path / "aug.jsonl",
                       "--hyp", tmp_path / "hyp.txt")
        assert code == 0
        assert "overlap undefined" in capsys.readouterr().out


class TestCompareCommand:
    def test_clear_winner_reported_significant(self, tmp_path, capsys):
        refs = [f"zeile {i} endet mit marke m{i:02d}" for i in range(60)]
        write_lines(refs, tmp_path / "a.txt")
        write_lines([""] * 60, tmp_path / "b.txt")
        write_lines(refs, tmp_path / "ref.txt")
        code = run_cli("compare", "--hyp-a", tmp_path / "a.txt", "--hyp-b", tmp_path / "b.txt",
                       "--ref", tmp_path / "ref.txt", "--bootstrap", "200")
        out = capsys.readouterr().out
        assert code == 0
        assert "p = 0.0000" in out
        assert out.rstrip().endswith("significant at 0.05")
        assert "wins_a = 200" in out

    def test_identical_systems_not_significant(self, tmp_path, capsys):
        refs = [f"zeile nummer {i}" for i in range(20)]
        write_lines(refs, tmp_path / "a.txt")
        write_lines(refs, tmp_path / "ref.txt")
        code = run_cli("compare", "--hyp-a", tmp_path / "a.txt", "--hyp-b", tmp_path / "a.txt",
                       "--ref", tmp_path / "ref.txt", "--bootstrap", "100")
        out = capsys.readouterr().out
        assert code == 0
        assert "p = 1.0000" in out
        assert "not significant" in out


class TestReportCommand:
    def write_cell(self, root, domain, k, score):
        cell_dir = root / f"{domain}__k{k}__relevant"
        cell_dir.mkdir(parents=True)
        payload = {
            "domain": domain, "k": k, "scenario": "relevant", "system": "sys",
            "bleu": {
                "score": score, "precisions": [0.5, 0.5, 0.5, 0.5],
                "brevity_penalty": 1.0, "hyp_length": 10, "ref_length": 10,
            },
            "overlap_pct": 50.0,
        }
        (cell_dir / "cell.json").write_text(json.dumps(payload), encoding="utf-8")

    def test_aggregates_cells_into_json_and_markdown(self, tmp_path, capsys):
        cells = tmp_path / "cells"
        self.write_cell(cells, "it", 1, 40.0)
        self.write_cell(cells, "med", 1, 50.0)
        code = run_cli("report", "--cells", cells, "--out", tmp_path / "report.json",
                       "--markdown", tmp_path / "report.md")
        assert code == 0
        assert "aggregated 2 cells" in capsys.readouterr().out
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["averages"] == [
            {"system": "sys", "scenario": "relevant", "bleu": 45.0, "overlap_pct": 50.0}
        ]
        assert "## BLEU per domain" in (tmp_path / "report.md").read_text()

    def test_empty_cells_dir_exits_2(self, tmp_path, capsys):
        (tmp_path / "cells").mkdir()
        code = run_cli("report", "--cells", tmp_path / "cells", "--out", tmp_path / "r.json")
        assert code == 2
        assert "no cell.json" in capsys.readouterr().err

    def test_incomplete_grid_exits_2(self, tmp_path, capsys):
        cells = tmp_path / "cells"
        self.write_cell(cells, "it", 1, 40.0)
        self.write_cell(cells, "it", 2, 41.0)
        self.write_cell(cells, "med", 1, 50.0)
        code = run_cli("report", "--cells", cells, "--out", tmp_path / "r.json")
        assert code == 2
        assert "missing cell" in capsys.readouterr().err


class TestRunCommand:
    def write_manifest(self, root):
        manifest = {
            "tms": ["tm.jsonl"],
            "test_sets": {"it": "test_it.jsonl", "med": "test_med.jsonl"},
            "domains": ["it", "med"],
            "k_values": [1],
            "scenarios": ["relevant", "less_relevant"],
            "translator": {"kind": "baseline_copy_first"},
            "out_dir": "out",
            "bootstrap": {"n": 50},
        }
        path = root / "exp.json"
        path.write_text(json.dumps(manifest), encoding="utf-8")
        return path

    def test_healthy_grid_exits_0(self, corpus_files, capsys):
        code = run_cli("run", "--manifest", self.write_manifest(corpus_files))
        captured = capsys.readouterr()
        assert code == 0
        assert "4 cells completed, 0 failed" in captured.out
        assert captured.err == ""
        assert (corpus_files / "out" / "report.json").is_file()

    def test_failed_cells_exit_1_with_stderr(self, corpus_files, capsys):
        (corpus_files / "test_med.jsonl").unlink()
        code = run_cli("run", "--manifest", self.write_manifest(corpus_files))
        captured = capsys.readouterr()
        assert code == 1
        assert "2 cells completed, 2 failed" in captured.out
        assert captured.err.count("failed ('med'") == 2

    def test_bad_manifest_exits_2(self, tmp_path, capsys):
        code = run_cli("run", "--manifest", tmp_path / "missing.json")
        assert code == 2
        assert "cannot read manifest" in capsys.readouterr().err


class TestParser:
    def test_unknown_subcommand_rejected(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            main([])
