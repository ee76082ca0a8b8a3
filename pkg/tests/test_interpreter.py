import numpy as np
import pytest

from oracles import brute_rewriters
from subjdb.core import And, AttributeKind, Method, Or, SubjectiveAttribute, SubjectiveLeaf
from subjdb.errors import Infeasible
from subjdb.interpreter import (InterpretationCache, InterpreterConfig,
                                RewriterProfile, VariationIndex, interpret_cooccurrence,
                                interpret_w2v, optimize_rewriters)
from subjdb.retrieval import InvertedIndex
from subjdb.schema_builder import MarkerAssigner, generate_markers_linear
from subjdb.text import SentimentLexicon


def _vindex(text, domain=("clean room", "dirty room", "spotless bedroom", "very clean room")):
    markers = generate_markers_linear(["clean room", "dirty room"], 2, text)
    attr = SubjectiveAttribute("cleanliness", AttributeKind.LINEAR, tuple(markers))
    return VariationIndex.build({"cleanliness": list(domain)}, {"cleanliness": MarkerAssigner(attr)},
                                text)


class TestVariationIndex:
    def test_exact_hit(self, tiny_text):
        vi = _vindex(tiny_text)
        hit = vi.lookup("Clean room")
        assert hit.path == "exact" and hit.phrase == "clean room"
        res = interpret_w2v("clean room", vi)
        assert res.confidence == pytest.approx(1.0)
        assert res.expr == SubjectiveLeaf("cleanliness", "clean room", "clean_room")

    def test_one_word_variant_fast_equals_scan(self, tiny_text):
        vi = _vindex(tiny_text)
        for q in ["very clean bedroom", "spotless room", "clean bedroom"]:
            slow = vi.lookup(q, fast=False)
            diff = sum(a != b for a, b in zip(q.split(), slow.phrase.split()))
            assert len(q.split()) == len(slow.phrase.split()) and diff == 1
            fast = vi.lookup(q)
            assert fast.path == "substitution"
            assert (fast.phrase, fast.similarity) == (slow.phrase, pytest.approx(slow.similarity))

    def test_candidates_cover_one_token_neighbours(self, tiny_text):
        vi = _vindex(tiny_text)
        assert set(vi.candidates(["dirty", "room"])) >= {"clean room"}
        assert "dirty room" not in vi.candidates(["dirty", "room"])

    def test_below_threshold(self, tiny_text):
        vi = _vindex(tiny_text)
        assert interpret_w2v("friendly staff", vi, threshold=0.5) is None

    def test_all_oov_is_none(self, tiny_text):
        assert interpret_w2v("xyzzy", _vindex(tiny_text)) is None

    def test_negated_maps_to_low_marker(self, tiny_text):
        res = interpret_w2v("dirty bedroom", _vindex(tiny_text))
        assert res.expr.marker == "dirty_room"

    def test_round_trip(self, tiny_text):
        vi = _vindex(tiny_text)
        back = VariationIndex.from_dict(vi.to_dict(), tiny_text)
        assert back.phrases == vi.phrases and back.substitution == vi.substitution
        assert back.lookup("very spotless room") == vi.lookup("very spotless room")

    def test_substitution_excludes_self(self, tiny_text):
        vi = _vindex(tiny_text)
        assert all(k != v for k, v in vi.substitution.items())


def _cooc_setup(n_both, n_only_a, n_other=5):
    """Reviews mentioning 'romantic'; some also carry attribute a, b or both."""
    docs, lookup = [], {}
    for i in range(n_both):
        docs.append((f"both{i}", "romantic lovely stay"))
        lookup[f"both{i}"] = [("a", "a_hi"), ("b", "b_hi")]
    for i in range(n_only_a):
        docs.append((f"onlya{i}", "romantic lovely stay"))
        lookup[f"onlya{i}"] = [("a", "a_hi"), ("a", "a_lo")]
    for i in range(n_other):
        docs.append((f"other{i}", "business trip"))
        lookup[f"other{i}"] = [("b", "b_lo")]
    idx = InvertedIndex.build(docs)
    return idx, lookup, SentimentLexicon({"lovely": 0.8})


class TestCooccurrence:
    def test_single_attribute(self):
        idx, lookup, lex = _cooc_setup(0, 6)
        res = interpret_cooccurrence("romantic", 10, 2, idx, lookup, lex, {"a": 1.0, "b": 1.0})
        assert res.method is Method.COOCCURRENCE
        assert res.expr == SubjectiveLeaf("a", "romantic", "a_hi")
        assert res.confidence == pytest.approx(min(1.0, 12 / 10))

    def test_conjunction_when_together(self):
        idx, lookup, lex = _cooc_setup(6, 2)
        res = interpret_cooccurrence("romantic", 10, 2, idx, lookup, lex, {"a": 1.0, "b": 1.0},
                                     conj_threshold=0.5)
        assert isinstance(res.expr, And)
        assert res.attributes == ["a", "b"]

    def test_disjunction_below_threshold(self):
        idx, lookup, lex = _cooc_setup(3, 5)
        res = interpret_cooccurrence("romantic", 10, 2, idx, lookup, lex, {"a": 1.0, "b": 1.0},
                                     conj_threshold=0.5)
        assert isinstance(res.expr, Or)

    def test_straddle(self):
        # 4 of 8 top reviews carry both attributes: exactly at the threshold
        idx, lookup, lex = _cooc_setup(4, 4)
        idf = {"a": 1.0, "b": 1.0}
        at = interpret_cooccurrence("romantic", 10, 2, idx, lookup, lex, idf, conj_threshold=0.5)
        above = interpret_cooccurrence("romantic", 10, 2, idx, lookup, lex, idf,
                                       conj_threshold=0.51)
        assert isinstance(at.expr, And) and isinstance(above.expr, Or)

    def test_no_matching_reviews(self):
        idx, lookup, lex = _cooc_setup(3, 3)
        assert interpret_cooccurrence("nothing", 10, 2, idx, lookup, lex, {}) is None

    def test_score_threshold(self):
        idx, lookup, lex = _cooc_setup(0, 1)
        assert interpret_cooccurrence("romantic", 10, 2, idx, lookup, lex, {"a": 1.0},
                                      score_threshold=3.0) is None

    def test_bad_k(self):
        idx, lookup, lex = _cooc_setup(1, 1)
        with pytest.raises(ValueError):
            interpret_cooccurrence("romantic", 0, 1, idx, lookup, lex, {})


class TestChain:
    def test_methods(self, small_db, small_corpus):
        it = small_db.interpreter
        exact = small_db.vindex.phrases[0]
        assert it.interpret(exact).method is Method.WORD2VEC
        assert it.interpret("xyzzy plugh").method is Method.TEXT_RETRIEVAL
        assert it.interpret("xyzzy plugh").text == "xyzzy plugh"

    def test_context_predicate_uses_cooccurrence(self, small_db):
        res = small_db.interpreter.interpret("romantic getaway", gate=0.8)
        assert res.method is Method.COOCCURRENCE
        assert "decor_style" in res.attributes

    def test_never_raises_on_arbitrary_text(self, small_db):
        for p in ["", "the", "not not not", "123 456"]:
            assert small_db.interpreter.interpret(p).method in set(Method)

    def test_cache(self, small_db):
        it = small_db.interpreter
        a = it.cached("very clean room", 0.8)
        assert ("very clean room", 0.8) in it.cache
        assert it.cached("very clean room", 0.8) is a

    def test_cache_factory_once(self):
        c, calls = InterpretationCache(), []
        for _ in range(3):
            c.get_or_insert("x", lambda: calls.append(1) or len(calls))
        assert calls == [1] and len(c) == 1

    def test_config_defaults(self):
        c = InterpreterConfig()
        assert (c.w2v_threshold, c.cooc_k, c.cooc_n) == (0.5, 50, 2)


def _profiles(times, precs):
    """Profiles from per-term lists; terms are 't0', 't1', ..."""
    out = []
    for j in range(len(times[0])):
        table = {f"t{i}": {"time_ms": times[i][j], "prec": precs[i][j]} for i in range(len(times))}
        out.append(RewriterProfile.from_table(f"r{j}", table))
    return out


class TestRewriters:
    def test_budget_forces_fast(self):
        a = optimize_rewriters(["t0"], _profiles([[10, 100]], [[0.5, 0.9]]), 50)
        assert a.choice == (0,)

    def test_unconstrained_picks_best(self):
        a = optimize_rewriters(["t0"], _profiles([[10, 100]], [[0.5, 0.9]]), 1000)
        assert a.choice == (1,) and a.total_prec == pytest.approx(0.9)

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            optimize_rewriters(["t0", "t1"], _profiles([[30, 40], [30, 40]],
                                                       [[0.1, 0.2], [0.1, 0.2]]), 50)

    def test_empty_terms(self):
        a = optimize_rewriters([], _profiles([[1]], [[0.1]]), 0)
        assert a.choice == () and a.average_prec == 0.0

    def test_ties_prefer_less_time(self):
        a = optimize_rewriters(["t0"], _profiles([[20, 10]], [[0.5, 0.5]]), 50)
        assert a.choice == (1,)

    def test_fractional_times_round_up(self):
        a = optimize_rewriters(["t0"], _profiles([[10.2, 1]], [[0.9, 0.1]]), 10)
        assert a.choice == (1,)

    def test_knapsack_reduction(self):
        # each item: take (weight w, value v) or skip (0, 0); capacity 10
        items = [(5, 10), (4, 40), (6, 30), (3, 50)]
        times = [[w, 0] for w, _ in items]
        precs = [[v / 100, 0.0] for _, v in items]
        a = optimize_rewriters([f"t{i}" for i in range(4)], _profiles(times, precs), 10)
        assert a.total_prec == pytest.approx(0.9)
        assert a.choice == (1, 0, 1, 0)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n, k = rng.integers(1, 5), rng.integers(1, 4)
        times = rng.integers(0, 30, size=(n, k)).tolist()
        precs = np.round(rng.random((n, k)), 1).tolist()
        budget = int(rng.integers(0, 60))
        expect = brute_rewriters(times, precs, budget)
        terms = [f"t{i}" for i in range(n)]
        if expect is None:
            with pytest.raises(Infeasible):
                optimize_rewriters(terms, _profiles(times, precs), budget)
            return
        a = optimize_rewriters(terms, _profiles(times, precs), budget)
        assert a.total_prec == pytest.approx(-expect[0])
        assert (a.total_time, a.choice) == (expect[1], expect[2])
