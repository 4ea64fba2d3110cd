"""Corpus loading, validation, and the two tokenizations."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ratkit import (
    CorpusFormatError,
    SentencePair,
    TranslationMemory,
    ValidationError,
    load_corpus,
    read_lines,
    save_corpus,
    tokenize_13a,
    write_lines,
)
from ratkit.corpus import analyze_for_index

FIXTURE = Path(__file__).parent / "data" / "bleu_fixture.json"


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def make_tm() -> TranslationMemory:
    return TranslationMemory(
        name="mini",
        pairs=(
            SentencePair(id="a1", source="guten Tag", target="good day", domain="d1"),
            SentencePair(id="a2", source="wie geht's?", target="how are you?", domain="d1"),
            SentencePair(id="a3", source="público", target="public", domain="d2"),
        ),
    )


class TestSentencePair:
    def test_rejects_empty_id(self):
        with pytest.raises(ValidationError, match="empty id"):
            SentencePair(id="", source="x", target="y", domain="d")

    def test_rejects_blank_source(self):
        with pytest.raises(ValidationError, match="source is empty"):
            SentencePair(id="p", source="   ", target="y", domain="d")

    def test_rejects_blank_target(self):
        with pytest.raises(ValidationError, match="target is empty"):
            SentencePair(id="p", source="x", target=" \t ", domain="d")

    def test_rejects_embedded_newline(self):
        with pytest.raises(ValidationError, match="line break"):
            SentencePair(id="p", source="two\nlines", target="y", domain="d")


class TestTranslationMemory:
    def test_rejects_empty(self):
        with pytest.raises(ValidationError, match="empty"):
            TranslationMemory(name="nothing", pairs=())

    def test_rejects_duplicate_ids(self):
        pair = SentencePair(id="p1", source="a", target="b", domain="d")
        with pytest.raises(ValidationError, match="duplicate pair id 'p1'"):
            TranslationMemory(name="dup", pairs=(pair, pair))

    def test_domains_collects_distinct_labels(self):
        assert make_tm().domains == frozenset({"d1", "d2"})

    def test_len_and_iter(self):
        tm = make_tm()
        assert len(tm) == 3
        assert [p.id for p in tm] == ["a1", "a2", "a3"]


class TestLoadCorpus:
    def test_jsonl_three_records(self, tmp_path):
        path = _write(
            tmp_path / "tm.jsonl",
            '{"id": "s1", "domain": "it", "src": "hallo", "tgt": "hello"}\n'
            '{"id": "s2", "domain": "law", "src": "gericht", "tgt": "court"}\n'
            '{"id": "s3", "domain": "it", "src": "rechner", "tgt": "computer"}\n',
        )
        tm = load_corpus(path)
        assert len(tm) == 3
        assert tm.domains == frozenset({"it", "law"})
        assert tm.pairs[1].source == "gericht"
        assert tm.name == "tm"

    def test_duplicate_id_cites_both_lines(self, tmp_path):
        path = _write(
            tmp_path / "tm.jsonl",
            '{"id": "s1", "domain": "d", "src": "a", "tgt": "b"}\n'
            '{"id": "s2", "domain": "d", "src": "c", "tgt": "d"}\n'
            '{"id": "s3", "domain": "d", "src": "e", "tgt": "f"}\n'
            '{"id": "s1", "domain": "d", "src": "g", "tgt": "h"}\n',
        )
        with pytest.raises(CorpusFormatError) as err:
            load_corpus(path)
        assert err.value.line == 4
        assert "duplicate id 's1'" in str(err.value)
        assert "line 1" in str(err.value)

    def test_tsv_five_pairs_two_domains(self, tmp_path):
        rows = [
            "t1\td1\tein\tone",
            "t2\td1\tzwei\ttwo",
            "t3\td2\tdrei\tthree",
            "t4\td2\tvier\tfour",
            "t5\td2\tfünf\tfive",
        ]
        tm = load_corpus(_write(tmp_path / "tm.tsv", "\n".join(rows) + "\n"))
        assert len(tm) == 5
        assert tm.domains == frozenset({"d1", "d2"})

    def test_invalid_json_names_line(self, tmp_path):
        path = _write(
            tmp_path / "tm.jsonl",
            '{"id": "s1", "domain": "d", "src": "a", "tgt": "b"}\nnot json\n',
        )
        with pytest.raises(CorpusFormatError) as err:
            load_corpus(path)
        assert err.value.line == 2

    def test_tsv_wrong_column_count(self, tmp_path):
        path = _write(tmp_path / "tm.tsv", "only\tthree\tcolumns\n")
        with pytest.raises(CorpusFormatError, match="4 tab-separated columns"):
            load_corpus(path)

    def test_missing_field(self, tmp_path):
        path = _write(tmp_path / "tm.jsonl", '{"id": "s1", "src": "a", "tgt": "b"}\n')
        with pytest.raises(CorpusFormatError, match="'domain'"):
            load_corpus(path)

    def test_non_string_field(self, tmp_path):
        path = _write(tmp_path / "tm.jsonl", '{"id": 7, "domain": "d", "src": "a", "tgt": "b"}\n')
        with pytest.raises(CorpusFormatError, match="'id'"):
            load_corpus(path)

    def test_empty_file(self, tmp_path):
        with pytest.raises(ValidationError, match="no records"):
            load_corpus(_write(tmp_path / "tm.jsonl", "\n\n"))

    def test_blank_lines_skipped(self, tmp_path):
        path = _write(
            tmp_path / "tm.jsonl",
            '\n{"id": "s1", "domain": "d", "src": "a", "tgt": "b"}\n\n',
        )
        assert len(load_corpus(path)) == 1

    def test_unknown_suffix_needs_explicit_format(self, tmp_path):
        path = _write(tmp_path / "tm.data", "t1\td\tsrc\ttgt\n")
        with pytest.raises(ValidationError, match="cannot infer"):
            load_corpus(path)
        assert len(load_corpus(path, format="tsv")) == 1


class TestRoundTrip:
    @pytest.mark.parametrize("fmt", ["jsonl", "tsv"])
    def test_save_load_round_trip(self, tmp_path, fmt):
        tm = make_tm()
        path = tmp_path / f"out.{fmt}"
        save_corpus(tm, path)
        loaded = load_corpus(path, name=tm.name)
        assert loaded.pairs == tm.pairs
        assert loaded.domains == tm.domains

    def test_jsonl_keeps_non_ascii_readable(self, tmp_path):
        path = tmp_path / "out.jsonl"
        save_corpus(make_tm(), path)
        assert "público" in path.read_text(encoding="utf-8")

    def test_tsv_rejects_embedded_tab(self, tmp_path):
        tm = TranslationMemory(
            name="bad",
            pairs=(SentencePair(id="p", source="has\ttab", target="y", domain="d"),),
        )
        with pytest.raises(ValidationError, match="tab"):
            save_corpus(tm, tmp_path / "out.tsv")


class TestAnalyzeForIndex:
    def test_strips_edge_punctuation_and_lowercases(self):
        assert analyze_for_index("The cat, sat.") == ["the", "cat", "sat"]

    def test_empty_input(self):
        assert analyze_for_index("") == []

    def test_internal_hyphen_preserved(self):
        assert analyze_for_index("über-Maß  geht") == ["über-maß", "geht"]

    def test_punctuation_only_token_dropped(self):
        assert analyze_for_index("a - b") == ["a", "b"]

    @given(st.text(max_size=80))
    def test_idempotent_on_joined_output(self, text):
        once = analyze_for_index(text)
        assert analyze_for_index(" ".join(once)) == once


class TestTokenize13a:
    def test_pads_punctuation(self):
        assert tokenize_13a("Hello, world!") == ["Hello", ",", "world", "!"]

    def test_decimal_number_kept_whole(self):
        assert tokenize_13a("1.5 percent") == ["1.5", "percent"]

    def test_case_preserved(self):
        assert tokenize_13a("MiXeD Case") == ["MiXeD", "Case"]

    def test_entity_unescaping(self):
        assert tokenize_13a("&quot;ja&quot; &amp; nein") == ['"', "ja", '"', "&", "nein"]

    def test_digit_dash_split(self):
        assert tokenize_13a("pages 3-5") == ["pages", "3", "-", "5"]

    def test_matches_frozen_oracle_token_for_token(self):
        fixture = json.loads(FIXTURE.read_text(encoding="utf-8"))
        for entry, hyp_tokens, ref_tokens in zip(
            fixture["pairs"], fixture["hyp_tokens"], fixture["ref_tokens"]
        ):
            assert tokenize_13a(entry["hyp"].rstrip()) == hyp_tokens
            assert tokenize_13a(entry["ref"].rstrip()) == ref_tokens


class TestLineIo:
    def test_write_read_round_trip(self, tmp_path):
        lines = ["erste Zeile", "zweite Zeile", "", "vierte"]
        path = tmp_path / "lines.txt"
        write_lines(lines, path)
        assert read_lines(path) == lines
        assert path.read_bytes().endswith(b"\n")
