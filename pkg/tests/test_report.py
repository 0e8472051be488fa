import hashlib
import json
import math
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import oracles
from linguaudit import (
    Artifact,
    ContractError,
    LeakageSummary,
    LinguisticProfile,
    Table,
    compute_correlations,
    emit,
    join,
    read_leakage,
    spearman,
    write_leakage,
)
from linguaudit.svg import bar_chart, cdf_chart, line_chart


def _profile(lang, **overrides):
    vals = dict(M=1.5, S=2.0, R=7.0, T=5.0, C=0.1, D=0.2)
    vals.update(overrides)
    return LinguisticProfile(
        lang=lang,
        n_tokens=100,
        n_types=20,
        sentence_len_hist=[[10, 10]],
        word_len_hist=[[4, 100]],
        fallbacks_used=[],
        **vals,
    )


def _summary(lang, unique=2, attempts=10, **overrides):
    kw = dict(
        memorization_tail_mass=0.05,
        memorization_threshold=0.01,
        mia_accuracy=0.55,
        mia_precision_in=0.6,
        mia_precision_out=0.9,
        mia_overlap=0.7,
    )
    kw.update(overrides)
    return LeakageSummary(
        lang=lang,
        extraction_unique={5: unique},
        extraction_attempts={5: attempts},
        **kw,
    )


class TestSpearman:
    def test_derived_hand_case(self):
        assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == 0.8

    def test_exact_endpoints(self):
        xs = [3.0, 1.0, 2.0, 5.0, 4.0]
        assert spearman(xs, xs) == 1.0
        assert spearman(xs, [-v for v in xs]) == -1.0

    def test_undefined_cases(self):
        assert spearman([1, 2], [2, 1]) is None
        assert spearman([1.0, 1.0, 1.0], [1, 2, 3]) is None
        assert spearman([1, 2, 3], [7, 7, 7]) is None

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            spearman([1, 2, 3], [1, 2])

    def test_matches_bruteforce_with_ties(self):
        rng = np.random.Generator(np.random.Philox(50))
        checked_defined = 0
        for _ in range(200):
            n = int(rng.integers(3, 11))
            xs = [float(v) for v in rng.integers(0, 4, n)]
            ys = [float(v) for v in rng.integers(0, 4, n)]
            got = spearman(xs, ys)
            want = oracles.spearman_bruteforce(xs, ys)
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(want, abs=1e-12)
                checked_defined += 1
        assert checked_defined > 100


class TestTable:
    def _table(self):
        return Table(
            name="t",
            columns=("label", "count", "value"),
            col_types=("str", "int", "float"),
            rows=[("a", 1, 0.5), ("b", None, None)],
        )

    def test_gnarly_csv_round_trip(self):
        rows = [
            ('with,comma', 1, math.pi),
            ('with "quotes"', None, -0.0),
            ("multi\nline", 3, 1e-300),
            ("ünïcode", -7, None),
        ]
        t = Table(
            name="gnarly",
            columns=("label", "count", "value"),
            col_types=("str", "int", "float"),
            rows=rows,
        )
        back = Table.from_csv("gnarly", t.to_csv(), ("str", "int", "float"))
        assert back.columns == t.columns
        assert back.rows == t.rows  # repr() floats survive exactly

    def test_round_trip_twice_is_identity(self):
        t = self._table()
        once = t.to_csv()
        again = Table.from_csv("t", once, t.col_types).to_csv()
        assert once == again

    def test_none_serializes_as_empty(self):
        t = self._table()
        lines = t.to_csv().splitlines()
        assert lines[2] == "b,,"

    def test_validation(self):
        with pytest.raises(ContractError, match="columns but"):
            Table(name="t", columns=("a", "b"), col_types=("str",))
        with pytest.raises(ContractError, match="unknown column type"):
            Table(name="t", columns=("a",), col_types=("bool",))
        with pytest.raises(ContractError, match="None is not representable"):
            Table(name="t", columns=("a",), col_types=("str",), rows=[(None,)])
        with pytest.raises(ContractError, match="expected int"):
            Table(name="t", columns=("a",), col_types=("int",), rows=[(True,)])
        with pytest.raises(ContractError, match="expected float"):
            Table(name="t", columns=("a",), col_types=("float",), rows=[(False,)])
        with pytest.raises(ContractError, match="non-finite"):
            Table(name="t", columns=("a",), col_types=("float",), rows=[(math.inf,)])
        with pytest.raises(ContractError, match="cells"):
            Table(name="t", columns=("a",), col_types=("str",), rows=[("x", "y")])

    def test_int_coerces_to_float_in_float_columns(self):
        t = Table(name="t", columns=("v",), col_types=("float",), rows=[(3,)])
        assert t.rows[0] == (3.0,)
        assert isinstance(t.rows[0][0], float)

    def test_append_validates(self):
        t = self._table()
        t.append(("c", 5, 1.25))
        assert t.rows[-1] == ("c", 5, 1.25)
        with pytest.raises(ContractError):
            t.append(("d", "not an int", 1.0))

    def test_from_csv_errors_cite_lines(self):
        with pytest.raises(ContractError, match="line 3"):
            Table.from_csv("t", "a,b\n1,2\n1\n", ("int", "int"))
        with pytest.raises(ContractError, match="line 2"):
            Table.from_csv("t", "a\nnot-int\n", ("int",))
        with pytest.raises(ContractError, match="empty CSV"):
            Table.from_csv("t", "", ("int",))


class TestLeakageSummary:
    def test_measures(self):
        s = LeakageSummary(
            lang="en",
            extraction_unique={5: 2, 12: 0},
            extraction_attempts={5: 10, 12: 0},
            memorization_tail_mass=0.08,
            mia_accuracy=0.61,
            mia_overlap=0.4,
        )
        assert s.measures() == {
            "extraction_rate_k5": 0.2,
            "extraction_rate_k12": None,
            "memorization_tail_mass": 0.08,
            "mia_accuracy": 0.61,
            "mia_overlap": 0.4,
        }

    def test_validation(self):
        with pytest.raises(ContractError, match="prompt sizes differ"):
            LeakageSummary("en", {5: 1}, {12: 1})
        with pytest.raises(ContractError, match="bad counts"):
            LeakageSummary("en", {5: 3}, {5: 2})
        with pytest.raises(ContractError, match="bad counts"):
            LeakageSummary("en", {5: -1}, {5: 2})

    def test_json_round_trip_preserves_none(self):
        s = LeakageSummary(
            lang="fr",
            extraction_unique={5: 0, 25: 4},
            extraction_attempts={5: 9, 25: 9},
        )
        back = LeakageSummary.from_json_dict(s.to_json_dict())
        assert back == s
        assert back.mia_accuracy is None
        assert json.loads(json.dumps(s.to_json_dict()))  # JSON-safe keys

    def test_file_round_trip(self, tmp_path):
        s = _summary("it")
        path = str(tmp_path / "leak.json")
        write_leakage(s, path)
        assert read_leakage(path) == s

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "leak.json"
        path.write_text('{"lang": "en"}')
        with pytest.raises(ContractError):
            read_leakage(str(path))


class TestJoin:
    def test_one_row_per_language_sorted(self):
        profiles = [_profile("es", M=2.0), _profile("en", M=1.2)]
        summaries = [_summary("en"), _summary("es")]
        t = join(profiles, summaries)
        assert t.name == "indicators_vs_leakage"
        assert t.columns[0] == "lang"
        assert [r[0] for r in t.rows] == ["en", "es"]
        m_col = t.columns.index("morphological_complexity")
        assert [r[m_col] for r in t.rows] == [1.2, 2.0]
        assert t.col_types == ("str",) + ("float",) * (len(t.columns) - 1)

    def test_missing_measure_leaves_null_cell(self):
        profiles = [_profile("en"), _profile("es")]
        summaries = [_summary("en"), _summary("es", mia_accuracy=None)]
        t = join(profiles, summaries)
        col = t.columns.index("mia_accuracy")
        by_lang = {r[0]: r for r in t.rows}
        assert by_lang["en"][col] == 0.55
        assert by_lang["es"][col] is None

    def test_language_set_mismatch_is_specific(self):
        with pytest.raises(ContractError, match=r"profiles-only=\['fr'\]"):
            join([_profile("fr")], [_summary("it")])

    def test_duplicate_language_rejected(self):
        with pytest.raises(ContractError, match="duplicate profile"):
            join([_profile("en"), _profile("en")], [_summary("en")])
        with pytest.raises(ContractError, match="duplicate leakage"):
            join([_profile("en")], [_summary("en"), _summary("en")])


class TestComputeCorrelations:
    def test_monotone_indicators(self):
        profiles = [
            _profile(f"l{i}", M=1.0 + i / 10, S=3.0 - i / 10) for i in range(4)
        ]
        summaries = [_summary(f"l{i}", unique=i, attempts=10) for i in range(4)]
        t = compute_correlations(profiles, summaries)
        assert t.columns == ("indicator", "measure", "spearman_rho", "n")
        by_key = {(r[0], r[1]): r for r in t.rows}
        up = by_key[("morphological_complexity", "extraction_rate_k5")]
        down = by_key[("syntactic_entropy", "extraction_rate_k5")]
        assert up[2] == 1.0 and up[3] == 4
        assert down[2] == -1.0
        # constant indicator -> undefined correlation, count preserved
        flat = by_key[("avg_word_length", "extraction_rate_k5")]
        assert flat[2] is None and flat[3] == 4

    def test_every_pair_emitted(self):
        profiles = [_profile(f"l{i}", M=1.0 + i) for i in range(3)]
        summaries = [_summary(f"l{i}") for i in range(3)]
        t = compute_correlations(profiles, summaries)
        n_measures = len(summaries[0].measures())
        assert len(t.rows) == 6 * n_measures

    def test_sparse_measure_keeps_count(self):
        profiles = [_profile(f"l{i}", M=1.0 + i) for i in range(4)]
        summaries = [
            _summary("l0"),
            _summary("l1"),
            _summary("l2", mia_accuracy=None),
            _summary("l3", mia_accuracy=None),
        ]
        t = compute_correlations(profiles, summaries)
        row = next(
            r for r in t.rows if r[0] == "morphological_complexity" and r[1] == "mia_accuracy"
        )
        assert row[2] is None and row[3] == 2


class TestArtifact:
    def test_name_validation(self):
        with pytest.raises(ContractError):
            Artifact(name="sub/dir.json", content="x")
        with pytest.raises(ContractError):
            Artifact(name="noextension", content="x")
        with pytest.raises(ContractError):
            Artifact(name="", content="x")

    def test_builders(self):
        a = Artifact.from_json("r.json", {"b": 1, "a": 2})
        assert a.content == '{\n  "a": 2,\n  "b": 1\n}\n'
        assert a.extension == "json"
        t = Table(name="tbl", columns=("x",), col_types=("int",), rows=[(1,)])
        assert Artifact.from_table(t).name == "tbl.csv"
        assert Artifact.from_svg("p.svg", "<svg/>").content == "<svg/>"


class TestEmit:
    def _artifacts(self):
        return [
            Artifact.from_json("alpha.json", {"v": 1}),
            Artifact(name="beta.csv", content="a\n1\n"),
            Artifact.from_svg("gamma.svg", bar_chart(["x"], [1.0], "t")),
        ]

    def test_manifest_lists_everything_with_true_digests(self, tmp_path):
        out = str(tmp_path / "out")
        manifest = emit(self._artifacts(), out)
        names = [e["name"] for e in manifest["files"]]
        assert names == sorted(names) == ["alpha.json", "beta.csv", "gamma.svg"]
        assert manifest["schema"] == "manifest/1"
        for entry in manifest["files"]:
            data = open(os.path.join(out, entry["name"]), "rb").read()
            assert entry["sha256"] == hashlib.sha256(data).hexdigest()
            assert entry["bytes"] == len(data)
        on_disk = json.load(open(os.path.join(out, "manifest.json")))
        assert on_disk == manifest

    def test_two_runs_identical_manifest(self, tmp_path):
        a = emit(self._artifacts(), str(tmp_path / "a"))
        b = emit(self._artifacts(), str(tmp_path / "b"))
        assert a == b
        raw_a = open(tmp_path / "a" / "manifest.json", "rb").read()
        raw_b = open(tmp_path / "b" / "manifest.json", "rb").read()
        assert raw_a == raw_b

    def test_digest_changes_iff_content_changes(self, tmp_path):
        base = self._artifacts()
        m1 = emit(base, str(tmp_path / "a"))
        changed = [
            Artifact.from_json("alpha.json", {"v": 2}),
            base[1],
            base[2],
        ]
        m2 = emit(changed, str(tmp_path / "b"))
        d1 = {e["name"]: e["sha256"] for e in m1["files"]}
        d2 = {e["name"]: e["sha256"] for e in m2["files"]}
        assert d1["alpha.json"] != d2["alpha.json"]
        assert d1["beta.csv"] == d2["beta.csv"]
        assert d1["gamma.svg"] == d2["gamma.svg"]

    def test_formats_filter(self, tmp_path):
        out = str(tmp_path / "out")
        manifest = emit(self._artifacts(), out, formats=("json",))
        assert [e["name"] for e in manifest["files"]] == ["alpha.json"]
        assert sorted(os.listdir(out)) == ["alpha.json", "manifest.json"]

    def test_extra_files_folded_in(self, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "pre.jsonl").write_text('{"k": 1}\n')
        manifest = emit(self._artifacts(), str(out), extra_files=("pre.jsonl",))
        names = [e["name"] for e in manifest["files"]]
        assert "pre.jsonl" in names
        entry = next(e for e in manifest["files"] if e["name"] == "pre.jsonl")
        assert entry["sha256"] == hashlib.sha256(b'{"k": 1}\n').hexdigest()

    def test_collisions_rejected(self, tmp_path):
        dup = [
            Artifact.from_json("a.json", {}),
            Artifact.from_json("a.json", {}),
        ]
        with pytest.raises(ContractError, match="duplicate artifact"):
            emit(dup, str(tmp_path / "x"))
        out = tmp_path / "y"
        out.mkdir()
        (out / "a.json").write_text("{}")
        with pytest.raises(ContractError, match="collides"):
            emit([Artifact.from_json("a.json", {})], str(out), extra_files=("a.json",))

    def test_unreadable_extra_file_rejected(self, tmp_path):
        with pytest.raises(ContractError, match="unreadable"):
            emit([], str(tmp_path / "out"), extra_files=("ghost.txt",))


class TestSvg:
    def test_bar_chart_is_valid_xml_with_labels(self):
        text = bar_chart(["en", "es"], [3.0, -1.5], "unique extractions", y_label="count")
        root = ET.fromstring(text)
        assert root.tag.endswith("svg")
        assert "en" in text and "es" in text
        assert "unique extractions" in text

    def test_charts_deterministic(self):
        a = bar_chart(["x", "y"], [1.0, 2.0], "t")
        b = bar_chart(["x", "y"], [1.0, 2.0], "t")
        assert a == b
        series = {"s1": [(0.0, 0.0), (1.0, 0.5)], "s2": [(0.0, 1.0)]}
        assert line_chart(series, "t", "x", "y") == line_chart(series, "t", "x", "y")

    def test_line_chart_valid_xml(self):
        text = line_chart(
            {"in": [(0.0, 0.1), (1.0, 0.9)], "out": [(0.0, 0.2), (1.0, 0.3)]},
            "separability",
            "confidence",
            "density",
        )
        ET.fromstring(text)
        assert "separability" in text and "in" in text and "out" in text

    def test_cdf_chart_wraps_line_chart(self):
        text = cdf_chart({"all": [(1.0, 0.5), (2.0, 1.0)]}, "lengths", "tokens")
        ET.fromstring(text)
        assert "cumulative fraction" in text

    def test_validation(self):
        with pytest.raises(ContractError):
            bar_chart(["a"], [1.0, 2.0], "t")
        with pytest.raises(ContractError):
            bar_chart([], [], "t")
        with pytest.raises(ContractError):
            line_chart({"s": []}, "t", "x", "y")
