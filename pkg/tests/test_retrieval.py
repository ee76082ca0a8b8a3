import math

import pytest

from subjdb.errors import DataError, UnknownDocument, UnknownEntity
from subjdb.retrieval import (InvertedIndex, bm25, bm25_idf, default_offset, entity_documents,
                              rank_score, sigmoid, text_retrieval_degree, top_k_reviews)
from subjdb.core import Review
from subjdb.text import SentimentLexicon

from oracles import naive_bm25, naive_senti_doc, naive_top_k

LEX = SentimentLexicon({"clean": 0.8, "dirty": -0.9, "great": 1.0, "awful": -1.0})


def _index(docs):
    return InvertedIndex.build(sorted(docs.items()))


class TestBm25:
    def test_no_overlap_is_zero(self):
        idx = _index({"a": "clean room", "b": "rude staff"})
        assert bm25("a", ["pool"], idx) == 0.0

    def test_single_doc_direct_formula(self):
        idx = _index({"d": "clean room clean"})
        q = ["clean", "room"]
        idf = math.log(1 + 0.5 / 1.5)
        # avgdl = dl, so the length norm is k1
        expected = idf * 2 * 2.2 / (2 + 1.2) + idf * 1 * 2.2 / (1 + 1.2)
        assert bm25("d", q, idx) == pytest.approx(expected)

    def test_rarer_term_scores_higher(self):
        idx = _index({"a": "common rare", "b": "common other"})
        assert bm25("a", ["rare"], idx) > bm25("b", ["common"], idx) > 0.0

    def test_matches_oracle(self):
        docs = {"a": "clean clean room", "b": "dirty room staff", "c": "great staff"}
        idx = _index(docs)
        for d in docs:
            assert bm25(d, ["room", "staff", "staff"], idx) == pytest.approx(
                naive_bm25(docs, d, ["room", "staff", "staff"]), abs=1e-12)

    def test_unknown_document(self):
        with pytest.raises(UnknownDocument):
            bm25("zz", ["a"], _index({"a": "x"}))

    def test_idf_never_negative(self):
        assert bm25_idf(3, 3) > 0.0

    def test_monotone_in_tf(self):
        lo = _index({"a": "clean room x", "b": "y z w"})
        hi = _index({"a": "clean clean x", "b": "y z w"})
        assert bm25("a", ["clean"], hi) > bm25("a", ["clean"], lo)


class TestRankScore:
    def test_neutral_review_halves(self):
        idx = _index({"a": "room with a view", "b": "staff"})
        assert rank_score("a", ["room"], idx, LEX) == pytest.approx(0.5 * bm25("a", ["room"], idx))

    def test_maximally_negative_is_zero(self):
        idx = _index({"a": "awful room", "b": "staff"})
        assert rank_score("a", ["room"], idx, LEX) == 0.0

    def test_product_of_factors(self):
        docs = {"a": "clean room not dirty", "b": "dirty staff"}
        idx = _index(docs)
        expected = naive_bm25(docs, "a", ["room"]) * naive_senti_doc(docs["a"], {"clean": 0.8,
                                                                                 "dirty": -0.9})
        assert rank_score("a", ["room"], idx, LEX) == pytest.approx(expected)


class TestTopK:
    DOCS = {"a": "clean room", "b": "clean clean room great", "c": "dirty room",
            "d": "staff great"}

    def test_saturation(self):
        out = top_k_reviews("room", 50, _index(self.DOCS), LEX)
        assert sorted(d for d, _ in out) == ["a", "b", "c"]

    def test_k1_is_argmax(self):
        out = top_k_reviews("clean room", 1, _index(self.DOCS), LEX)
        assert out == naive_top_k(self.DOCS, "clean room", 1, LEX.scores)

    def test_nothing_matches(self):
        assert top_k_reviews("pool", 3, _index(self.DOCS), LEX) == []

    def test_ties_by_doc_id(self):
        docs = {"z": "room", "a": "room", "m": "room"}
        assert [d for d, _ in top_k_reviews("room", 3, _index(docs), LEX)] == ["a", "m", "z"]

    def test_bad_k(self):
        with pytest.raises(ValueError):
            top_k_reviews("room", 0, _index(self.DOCS), LEX)


class TestDegree:
    def test_midpoint_and_value(self):
        assert sigmoid(0.0) == 0.5
        assert sigmoid(-5.0) == pytest.approx(0.0066929, abs=1e-6)

    def test_degree_at_offset(self):
        idx = _index({"e1": "clean room", "e2": "staff"})
        c = bm25("e1", ["clean"], idx)
        assert text_retrieval_degree("e1", "clean", idx, c) == pytest.approx(0.5)
        assert text_retrieval_degree("e2", "clean", idx, c) < 0.5

    def test_strictly_monotone(self):
        idx = _index({"e1": "clean clean room", "e2": "clean room room", "e3": "room"})
        vals = [text_retrieval_degree(e, "clean", idx, 0.3) for e in ("e1", "e2", "e3")]
        assert vals[0] > vals[1] > vals[2] > 0.0

    def test_unknown_entity(self):
        with pytest.raises(UnknownEntity):
            text_retrieval_degree("nope", "clean", _index({"a": "x"}), 0.0)

    def test_default_offset_is_median(self):
        docs = {"a": "clean", "b": "clean clean x", "c": "clean x y z", "d": "other"}
        idx = _index(docs)
        scores = sorted(bm25(d, ["clean"], idx) for d in "abc")
        assert default_offset(["clean"], idx) == pytest.approx(scores[1])
        assert default_offset(["pool"], idx) == 0.0

    def test_entity_documents(self):
        revs = [Review("x", "1", "one"), Review("y", "1", "two"), Review("x", "2", "three")]
        assert entity_documents(revs) == {"x": "one three", "y": "two"}


class TestPersistence:
    def test_round_trip(self, tmp_path):
        docs = {"a": "clean room", "b": "dirty room staff"}
        idx = _index(docs)
        idx.save(tmp_path / "i.json")
        back = InvertedIndex.load(tmp_path / "i.json")
        for d in docs:
            assert back.score(d, ["room", "staff"]) == idx.score(d, ["room", "staff"])
        assert back.doc_sentiment("a", LEX) == idx.doc_sentiment("a", LEX)

    def test_version_checked(self):
        d = _index({"a": "x"}).to_dict()
        d["version"] = 99
        with pytest.raises(DataError):
            InvertedIndex.from_dict(d)

    def test_duplicate_ids(self):
        with pytest.raises(ValueError):
            InvertedIndex.build([("a", "x"), ("a", "y")])
