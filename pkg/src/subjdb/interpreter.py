"""Predicate interpretation: embedding lookup over the linguistic domains,
review co-occurrence, text-retrieval fallback, and rewriter selection under a
time budget."""

from __future__ import annotations

import json
import math
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import And, Interpretation, Method, Or, SubjectiveLeaf
from .errors import AllTokensOutOfVocabulary, Infeasible
from .retrieval import InvertedIndex, top_k_reviews
from .text import SentimentLexicon, TextModel, smoothed_idf, tokenize


def normalize_phrase(text: str) -> str:
    return " ".join(tokenize(text))


@dataclass(frozen=True)
class VariationEntry:
    attribute: str
    marker: str
    vector: np.ndarray


@dataclass(frozen=True)
class Lookup:
    phrase: str
    similarity: float
    path: str  # "exact", "substitution" or "scan"


class VariationIndex:
    """Every linguistic-domain phrase with its attribute, nearest marker and vector.

    Also holds the one-word substitution table: each vocabulary token maps
    to the domain token w' minimising |w2v(w)·idf(w) - w2v(w')·idf(w')|.
    A wildcard table (phrase with one position blanked) complements it so
    that every indexed phrase one token away from a query is a candidate.
    """

    def __init__(self, entries: dict, substitution: dict, text: TextModel):
        self.entries = entries
        self.substitution = substitution
        self.text = text
        self.phrases = sorted(entries)
        self.phrase_set = frozenset(self.phrases)
        m = np.array([entries[p].vector for p in self.phrases]).reshape(len(self.phrases), text.dim)
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        self._unit = m / norms
        self._wild = defaultdict(list)
        for p in self.phrases:
            toks = p.split()
            for i in range(len(toks)):
                self._wild[_wild_key(toks, i)].append(p)

    @classmethod
    def build(cls, domains: dict, assigners: dict, text: TextModel):
        """``domains`` maps attribute to phrases; ``assigners`` to a MarkerAssigner."""
        entries = {}
        for attr in sorted(domains):
            for phrase in domains[attr]:
                key = normalize_phrase(phrase)
                vec = text.try_rep(key)
                if vec is None or key in entries:
                    continue
                entries[key] = VariationEntry(attr, assigners[attr].assign(vec), vec)
        domain_tokens = sorted({t for p in entries for t in p.split() if t in text.emb})
        return cls(entries, build_substitution(domain_tokens, text), text)

    def __len__(self):
        return len(self.phrases)

    def scan(self, qvec) -> tuple[str, float]:
        """Exhaustive cosine search; ties resolve to the lexicographically first phrase."""
        n = np.linalg.norm(qvec)
        sims = self._unit @ (qvec / n if n > 0 else qvec)
        i = int(np.argmax(sims))
        return self.phrases[i], float(min(1.0, max(-1.0, sims[i])))

    def candidates(self, tokens) -> list[str]:
        """Indexed phrases reachable from ``tokens`` by replacing one word."""
        out = []
        for i, tok in enumerate(tokens):
            sub = self.substitution.get(tok)
            if sub is not None and sub != tok:
                cand = " ".join(tokens[:i] + [sub] + tokens[i + 1:])
                if cand in self.phrase_set:
                    out.append(cand)
            out.extend(self._wild.get(_wild_key(tokens, i), ()))
        query = " ".join(tokens)
        return [p for p in dict.fromkeys(out) if p != query]

    def lookup(self, predicate: str, fast=True) -> Lookup:
        """Most similar indexed phrase. Raises AllTokensOutOfVocabulary."""
        key = normalize_phrase(predicate)
        qvec = self.text.rep(key)
        if fast:
            if key in self.phrase_set:
                return Lookup(key, self._sim(qvec, key), "exact")
            cands = self.candidates(key.split())
            if cands:
                best = min(cands, key=lambda p: (-self._sim(qvec, p), p))
                return Lookup(best, self._sim(qvec, best), "substitution")
        phrase, sim = self.scan(qvec)
        return Lookup(phrase, sim, "scan")

    def _sim(self, qvec, phrase):
        v = self.entries[phrase].vector
        nq, nv = np.linalg.norm(qvec), np.linalg.norm(v)
        if nq == 0 or nv == 0:
            return 0.0
        return float(min(1.0, max(-1.0, qvec @ v / (nq * nv))))

    def to_dict(self):
        return {"entries": {p: {"attribute": e.attribute, "marker": e.marker}
                            for p, e in sorted(self.entries.items())},
                "substitution": dict(sorted(self.substitution.items()))}

    @classmethod
    def from_dict(cls, d, text: TextModel):
        entries = {p: VariationEntry(v["attribute"], v["marker"], text.rep(p))
                   for p, v in d["entries"].items()}
        return cls(entries, dict(d["substitution"]), text)


def _wild_key(tokens, i):
    return " ".join(tokens[:i] + ["\x00"] + tokens[i + 1:])


def build_substitution(domain_tokens: Sequence[str], text: TextModel) -> dict:
    """Nearest domain token (other than itself) for every vocabulary token."""
    if not domain_tokens:
        return {}
    emb, idf = text.emb, text.idf
    dom = np.array([emb[t] * idf(t) for t in domain_tokens])
    out = {}
    for tok in emb.tokens:
        v = emb[tok] * idf(tok)
        d = np.linalg.norm(dom - v, axis=1)
        order = np.lexsort((np.arange(len(domain_tokens)), d))
        for i in order:
            if domain_tokens[i] != tok:
                out[tok] = domain_tokens[i]
                break
    return out


def interpret_w2v(predicate: str, vindex: VariationIndex, threshold=0.5, fast=True):
    """Single attribute.marker leaf for the most similar variation, or None below threshold."""
    try:
        hit = vindex.lookup(predicate, fast=fast)
    except AllTokensOutOfVocabulary:
        return None
    return _w2v_result(predicate, vindex, hit, threshold)


def _w2v_result(predicate, vindex, hit: Lookup, threshold):
    if hit.similarity < threshold:
        return None
    entry = vindex.entries[hit.phrase]
    return Interpretation(Method.WORD2VEC, max(0.0, hit.similarity),
                          SubjectiveLeaf(entry.attribute, predicate, entry.marker))


# ---------------------------------------------------------------------------
# Co-occurrence
# ---------------------------------------------------------------------------

def attribute_idf(extraction_lookup: dict, review_count: int) -> dict:
    """Smoothed IDF of each attribute over reviews that mention it."""
    df = Counter()
    for pairs in extraction_lookup.values():
        df.update({a for a, _ in pairs})
    return {a: smoothed_idf(review_count, n) for a, n in sorted(df.items())}


def interpret_cooccurrence(predicate: str, k: int, n: int, review_index: InvertedIndex,
                           extraction_lookup: dict, lex: SentimentLexicon, idf_attr: dict,
                           conj_threshold=0.5, score_threshold=3.0, marker_order=None):
    """Attributes most mentioned in the predicate's best reviews.

    ``extraction_lookup`` maps review doc id to the (attribute, marker) pairs
    extracted from it. Attributes rank by freq_k(A)·idf(A); those with fewer
    than ``score_threshold`` co-occurring extractions are dropped, and None is
    returned when nothing survives.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    top = top_k_reviews(predicate, k, review_index, lex)
    if not top:
        return None
    freq = Counter()
    markers = defaultdict(Counter)
    per_doc = []
    for doc_id, _ in top:
        pairs = extraction_lookup.get(doc_id, ())
        per_doc.append({a for a, _ in pairs})
        for a, m in pairs:
            freq[a] += 1
            markers[a][m] += 1
    if not freq:
        return None
    scores = {a: f * idf_attr.get(a, 1.0) for a, f in freq.items()}
    ranked = sorted(scores, key=lambda a: (-scores[a], a))[:n]
    chosen = [a for a in ranked if freq[a] >= score_threshold]
    if not chosen:
        return None

    leaves = []
    for a in chosen:
        order = (marker_order or {}).get(a)
        cnt = markers[a]
        if order:
            best = max(order, key=lambda m: (cnt.get(m, 0), -order.index(m)))
        else:
            best = sorted(cnt, key=lambda m: (-cnt[m], m))[0]
        leaves.append(SubjectiveLeaf(a, predicate, best))
    if len(leaves) == 1:
        expr = leaves[0]
    else:
        together = sum(1 for attrs in per_doc if all(a in attrs for a in chosen)) / len(top)
        expr = And(tuple(leaves)) if together >= conj_threshold else Or(tuple(leaves))
    confidence = min(1.0, scores[chosen[0]] / k)
    return Interpretation(Method.COOCCURRENCE, confidence, expr)


# ---------------------------------------------------------------------------
# The three-stage chain
# ---------------------------------------------------------------------------

@dataclass
class InterpreterConfig:
    w2v_threshold: float = 0.5
    combined_threshold: float = 0.8
    cooc_k: int = 50
    cooc_n: int = 2
    conj_threshold: float = 0.5
    score_threshold: float = 3.0
    fast_lookup: bool = True


class InterpretationCache:
    """Predicate to Interpretation map with atomic get-or-insert."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def get_or_insert(self, key, factory: Callable):
        with self._lock:
            if key in self._data:
                return self._data[key]
        value = factory()
        with self._lock:
            return self._data.setdefault(key, value)

    def __contains__(self, key):
        with self._lock:
            return key in self._data

    def __len__(self):
        with self._lock:
            return len(self._data)


class Interpreter:
    def __init__(self, vindex: VariationIndex, review_index: InvertedIndex,
                 extraction_lookup: dict, lex: SentimentLexicon,
                 config: InterpreterConfig | None = None, marker_order=None):
        self.vindex = vindex
        self.review_index = review_index
        self.extraction_lookup = extraction_lookup
        self.lex = lex
        self.config = config or InterpreterConfig()
        self.idf_attr = attribute_idf(extraction_lookup, review_index.doc_count)
        self.marker_order = marker_order or {}
        self.cache = InterpretationCache()

    def w2v(self, predicate, threshold=None):
        t = self.config.w2v_threshold if threshold is None else threshold
        return interpret_w2v(predicate, self.vindex, t, fast=self.config.fast_lookup)

    def cooccurrence(self, predicate):
        c = self.config
        return interpret_cooccurrence(predicate, c.cooc_k, c.cooc_n, self.review_index,
                                      self.extraction_lookup, self.lex, self.idf_attr,
                                      c.conj_threshold, c.score_threshold, self.marker_order)

    def interpret(self, predicate: str, gate: float | None = None) -> Interpretation:
        """Embedding lookup, then co-occurrence, then text fallback; never fails.

        With ``gate`` above the base threshold, the embedding answer must
        reach ``gate`` before co-occurrence is tried; an embedding answer
        between the two thresholds is still preferred over the text fallback.
        """
        base = self.config.w2v_threshold
        gate = base if gate is None else max(gate, base)
        try:
            hit = self.vindex.lookup(predicate, fast=self.config.fast_lookup)
        except AllTokensOutOfVocabulary:
            hit = None
        if hit is not None:
            res = _w2v_result(predicate, self.vindex, hit, gate)
            if res is not None:
                return res
        res = self.cooccurrence(predicate)
        if res is not None:
            return res
        if hit is not None:
            res = _w2v_result(predicate, self.vindex, hit, base)
            if res is not None:
                return res
        return Interpretation(Method.TEXT_RETRIEVAL, 0.0, text=predicate)

    def cached(self, predicate: str, gate: float | None = None) -> Interpretation:
        return self.cache.get_or_insert((predicate, gate), lambda: self.interpret(predicate, gate))


# ---------------------------------------------------------------------------
# Rewriter selection
# ---------------------------------------------------------------------------

@dataclass
class RewriterProfile:
    name: str
    time_estimate: Callable[[str], float]
    prec_estimate: Callable[[str], float]

    @classmethod
    def from_table(cls, name, table: dict):
        """``table`` maps predicate to {time_ms, prec}; unknown predicates cost infinity."""
        return cls(name,
                   lambda q: float(table[q]["time_ms"]) if q in table else math.inf,
                   lambda q: float(table[q]["prec"]) if q in table else 0.0)


def load_profiles(path) -> list[RewriterProfile]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = [data]
    return [RewriterProfile.from_table(d["name"], d["terms"]) for d in data]


@dataclass(frozen=True)
class RewriterAssignment:
    choice: tuple
    total_prec: float
    total_time: int

    @property
    def average_prec(self):
        return self.total_prec / len(self.choice) if self.choice else 0.0


_TOL = 1e-12


def _better(a, b):
    """(prec, time) a strictly preferred over b: more precision, then less time."""
    if b is None:
        return True
    if a[0] > b[0] + _TOL:
        return True
    return abs(a[0] - b[0]) <= _TOL and a[1] < b[1]


def optimize_rewriters(terms: Sequence[str], profiles: Sequence[RewriterProfile],
                       t_max) -> RewriterAssignment:
    """Maximise summed (equivalently average) precision subject to total time <= t_max.

    Multiple-choice knapsack by dynamic programming over (term, remaining
    integer budget). Times are rounded up to whole milliseconds. Ties go to
    the smaller total time, then the lexicographically smallest choice.
    """
    n, k = len(terms), len(profiles)
    budget = int(math.floor(t_max))
    if budget < 0:
        raise Infeasible("negative time budget")
    times = [[math.inf] * k for _ in range(n)]
    precs = [[0.0] * k for _ in range(n)]
    for i, q in enumerate(terms):
        for j, p in enumerate(profiles):
            t = p.time_estimate(q)
            if t < 0:
                raise ValueError(f"negative time estimate for {p.name!r} on {q!r}")
            times[i][j] = math.ceil(t) if math.isfinite(t) else math.inf
            precs[i][j] = float(p.prec_estimate(q))
    finite = [max((t for t in row if math.isfinite(t)), default=0) for row in times]
    budget = min(budget, int(sum(finite)))

    # best[i][r]: optimal (prec, time) for terms i.. with r ms left; None if infeasible
    best = [[None] * (budget + 1) for _ in range(n + 1)]
    best[n] = [(0.0, 0)] * (budget + 1)
    for i in range(n - 1, -1, -1):
        nxt, cur = best[i + 1], best[i]
        for r in range(budget + 1):
            top = None
            for j in range(k):
                t = times[i][j]
                if t > r or nxt[r - t] is None:
                    continue
                cand = (precs[i][j] + nxt[r - t][0], t + nxt[r - t][1])
                if _better(cand, top):
                    top = cand
            cur[r] = top
    if n and best[0][budget] is None:
        raise Infeasible(f"no rewriter combination fits in {t_max} ms")

    choice, r = [], budget
    for i in range(n):
        target = best[i][r]
        for j in range(k):
            t = times[i][j]
            if t > r or best[i + 1][r - t] is None:
                continue
            cand = (precs[i][j] + best[i + 1][r - t][0], t + best[i + 1][r - t][1])
            if not _better(target, cand) and not _better(cand, target):
                choice.append(j)
                r -= t
                break
    total_prec = sum(precs[i][j] for i, j in enumerate(choice))
    total_time = sum(times[i][j] for i, j in enumerate(choice))
    return RewriterAssignment(tuple(choice), total_prec, int(total_time))
