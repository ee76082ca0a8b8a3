import csv
import io
import json
import shutil

import pytest

from conftest import FIXTURE_DIR
from subjdb.cli import main


@pytest.fixture
def data(tmp_path):
    d = tmp_path / "hotels"
    shutil.copytree(FIXTURE_DIR, d)
    return d


@pytest.fixture
def built(data, capsys):
    assert main(["--data-dir", str(data), "build"]) == 0
    capsys.readouterr()
    return data


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestBuildAndValidate:
    def test_validate(self, data, capsys):
        code, out, _ = _run(capsys, "--data-dir", data, "validate")
        assert code == 0 and json.loads(out) == {"valid": True, "violations": []}

    def test_build_report(self, data, capsys):
        code, out, _ = _run(capsys, "--data-dir", data, "build")
        report = json.loads(out)
        assert code == 0
        assert report["counts"]["entities"] == 10 and report["counts"]["reviews"] == 120
        assert (data / "build" / "models.json").exists()

    def test_corrupt_line(self, data, capsys):
        lines = (data / "reviews.jsonl").read_text(encoding="utf-8").splitlines()
        lines[2] = '{"entity_id": "h0", broken'
        (data / "reviews.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
        code, _, err = _run(capsys, "--data-dir", data, "build")
        assert code == 2
        assert "reviews.jsonl:3" in json.loads(err)["message"]

    def test_missing_artifacts(self, data, capsys):
        code, _, err = _run(capsys, "--data-dir", data, "query", "--sql", "select * from Hotels")
        assert code == 2 and "run `build` first" in err


class TestQuery:
    def test_ranked_json(self, built, capsys):
        sql = 'select * from Hotels h where h.price_pn < 300 and "clean room"'
        code, out, _ = _run(capsys, "--data-dir", built, "query", "--sql", sql, "--k", 3)
        res = json.loads(out)
        assert code == 0 and len(res["results"]) <= 3
        degrees = [r["degree"] for r in res["results"]]
        assert degrees == sorted(degrees, reverse=True)
        assert res["interpretations"]["clean room"]["method"] == "Word2Vec"

    def test_syntax_error_exit_1(self, built, capsys):
        code, _, err = _run(capsys, "--data-dir", built, "query", "--sql", "select * from where")
        assert code == 1
        assert json.loads(err)["error"] == "QuerySyntaxError" and "14" in err

    def test_unknown_relation(self, built, capsys):
        code, _, _ = _run(capsys, "--data-dir", built, "query", "--sql", "select * from Pubs")
        assert code == 1

    def test_bad_flag(self, capsys):
        code, _, _ = _run(capsys, "query", "--bogus")
        assert code == 1


class TestInterpret:
    def test_word2vec(self, built, capsys):
        code, out, _ = _run(capsys, "--data-dir", built, "interpret", "--predicate",
                            "spotless bedroom")
        res = json.loads(out)
        assert code == 0 and res["method"] == "Word2Vec"
        assert res["predicate"] == "spotless bedroom"

    def test_fallback(self, built, capsys):
        code, out, _ = _run(capsys, "--data-dir", built, "interpret", "--predicate", "xyzzy")
        assert code == 0 and json.loads(out)["method"] == "TextRetrieval"


class TestEvalAndGenerate:
    def test_eval_csv(self, built, capsys):
        code, out, _ = _run(capsys, "--data-dir", built, "eval", "--workload", "easy",
                            "--queries", 5)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert [r["method"] for r in rows] == ["engine", "ir", "hard"]
        assert all(0.0 <= float(r["quality"]) <= 1.0 for r in rows)

    def test_generate_deterministic(self, tmp_path, capsys):
        for name in ("a", "b"):
            code, out, _ = _run(capsys, "--seed", 4, "generate", "--out", tmp_path / name,
                                "--entities", 5, "--reviews", 3, "--labels", 10)
            assert code == 0 and json.loads(out)["entities"] == 5
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_config_file(self, data, tmp_path, capsys):
        (tmp_path / "c.toml").write_text("marker_k = 4\nepochs = 20\n", encoding="utf-8")
        code, out, _ = _run(capsys, "--config", tmp_path / "c.toml", "--data-dir", data, "build")
        assert code == 0
        assert set(json.loads(out)["counts"]["markers"].values()) == {4}

    def test_bad_config_value(self, data, tmp_path, capsys):
        (tmp_path / "c.toml").write_text("w2v_threshold = 3.0\n", encoding="utf-8")
        code, _, _ = _run(capsys, "--config", tmp_path / "c.toml", "--data-dir", data, "build")
        assert code == 1
