import json
import shutil

import numpy as np
import pytest

from conftest import FIXTURE_DIR
from subjdb.config import Config
from subjdb.database import (ARTIFACT_FILES, CorpusInputs, SubjectiveDatabase, ValidationFailed,
                             artifact_hashes)
from subjdb.errors import DataError
from subjdb.query import evaluate, parse


@pytest.fixture(scope="module")
def fixture_db():
    return SubjectiveDatabase.build(CorpusInputs.load(FIXTURE_DIR), Config(seed=0))


class TestBuild:
    def test_fixture_counts(self, fixture_db):
        c = fixture_db.report.counts
        assert (c["entities"], c["reviews"], c["extractions"], c["attributes"]) == (10, 120, 307, 5)
        assert c["summaries"] == 50
        assert all(n == 10 for n in c["markers"].values())
        assert fixture_db.report.findings == []

    def test_every_entity_has_summaries(self, fixture_db):
        for e in fixture_db.entities:
            for a in fixture_db.attributes:
                s = fixture_db.summaries[(e.id, a)]
                assert s.total == sum(s.counts.values())

    def test_objective_attributes(self, fixture_db):
        assert fixture_db.objective_attributes == {"price_pn", "stars", "city"}

    def test_evidence_free_prior(self, fixture_db):
        db = fixture_db
        val, empty = db.degree("nope", "quietness", "quiet street", db.attributes["quietness"].marker_names[0])
        assert empty and val == db.config.zero_evidence_prior

    def test_missing_input_named(self, tmp_path):
        shutil.copytree(FIXTURE_DIR, tmp_path / "d")
        (tmp_path / "d" / "lexicon.tsv").unlink()
        with pytest.raises(DataError, match="lexicon.tsv"):
            CorpusInputs.load(tmp_path / "d")

    def test_dangling_extraction_aborts(self, tmp_path):
        shutil.copytree(FIXTURE_DIR, tmp_path / "d")
        with open(tmp_path / "d" / "extractions.jsonl", "a", encoding="utf-8") as f:
            f.write(json.dumps({"entity_id": "h0", "review_id": "ghost", "aspect": "room",
                                "opinion": "clean"}) + "\n")
        with pytest.raises(ValidationFailed):
            SubjectiveDatabase.build(CorpusInputs.load(tmp_path / "d"), Config())


class TestPersistence:
    def test_rebuild_identical_hashes(self, tmp_path, fixture_db):
        fixture_db.save(tmp_path / "a")
        again = SubjectiveDatabase.build(CorpusInputs.load(FIXTURE_DIR), Config(seed=0))
        again.save(tmp_path / "b")
        ha, hb = artifact_hashes(tmp_path / "a"), artifact_hashes(tmp_path / "b")
        assert set(ARTIFACT_FILES) <= set(ha)
        assert ha == hb

    def test_load_round_trip_answers(self, tmp_path, fixture_db):
        data = tmp_path / "d"
        shutil.copytree(FIXTURE_DIR, data)
        fixture_db.save(data / "build")
        loaded = SubjectiveDatabase.load(data, fixture_db.config)
        q = parse('select * from Hotels where "clean room" and "friendly staff"')
        a, b = evaluate(q, fixture_db, k=10), evaluate(q, loaded, k=10)
        assert a.entity_ids == b.entity_ids
        np.testing.assert_allclose([r.degree for r in a.rows], [r.degree for r in b.rows],
                                   atol=1e-9)

    def test_load_without_build(self, tmp_path):
        shutil.copytree(FIXTURE_DIR, tmp_path / "d")
        with pytest.raises(DataError, match="run `build` first"):
            SubjectiveDatabase.load(tmp_path / "d", Config())


class TestLabels:
    def test_pseudo_labels_have_both_classes(self, desk_db):
        by_attr = desk_db.pseudo_examples()
        assert sorted(by_attr) == sorted(desk_db.attributes)
        for ex in by_attr.values():
            labels = [e.label for e in ex]
            assert 0 < sum(labels) < len(labels)

    def test_models_trained_per_attribute(self, small_db):
        assert sorted(small_db.models) == sorted(small_db.attributes)
        for m in small_db.models.values():
            assert m.losses[-1] < m.losses[0]
