"""Okapi BM25 over an inverted index, sentiment-weighted review search and the
text-retrieval degree of truth."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from pathlib import Path
from statistics import median
from typing import Iterable

from .errors import DataError, UnknownDocument, UnknownEntity
from .text import SentimentLexicon, senti_doc, tokenize

INDEX_FORMAT_VERSION = 1

K1 = 1.2
B = 0.75


def bm25_idf(doc_count: int, df: int) -> float:
    # ln(1 + x) form of the Robertson-Sparck Jones weight; never negative
    return math.log(1.0 + (doc_count - df + 0.5) / (df + 0.5))


class InvertedIndex:
    """Postings, document lengths and (optionally) raw texts for BM25 scoring."""

    def __init__(self, k1=K1, b=B):
        self.k1 = k1
        self.b = b
        self.postings = {}
        self.doc_lengths = {}
        self.texts = {}
        self._tf = {}
        self._senti = {}

    @classmethod
    def build(cls, docs: Iterable[tuple[str, str]], k1=K1, b=B, keep_text=True):
        """Index (doc id, text) pairs."""
        idx = cls(k1, b)
        postings = defaultdict(list)
        for doc_id, text in docs:
            if doc_id in idx.doc_lengths:
                raise ValueError(f"duplicate document id {doc_id!r}")
            toks = tokenize(text)
            tf = Counter(toks)
            idx.doc_lengths[doc_id] = len(toks)
            idx._tf[doc_id] = tf
            if keep_text:
                idx.texts[doc_id] = text
            for tok, n in tf.items():
                postings[tok].append((doc_id, n))
        idx.postings = {t: sorted(p) for t, p in sorted(postings.items())}
        return idx

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    @property
    def avg_doc_length(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def df(self, token) -> int:
        return len(self.postings.get(token, ()))

    def idf(self, token) -> float:
        return bm25_idf(self.doc_count, self.df(token))

    def __contains__(self, doc_id):
        return doc_id in self.doc_lengths

    def _term_score(self, tf, dl, avgdl, idf):
        norm = self.k1 * (1.0 - self.b + self.b * dl / avgdl) if avgdl > 0 else self.k1
        return idf * tf * (self.k1 + 1.0) / (tf + norm)

    def score(self, doc_id, query_tokens) -> float:
        if doc_id not in self.doc_lengths:
            raise UnknownDocument(doc_id)
        tf = self._tf[doc_id]
        dl = self.doc_lengths[doc_id]
        avgdl = self.avg_doc_length
        total = 0.0
        for tok in query_tokens:
            n = tf.get(tok, 0)
            if n:
                total += self._term_score(n, dl, avgdl, self.idf(tok))
        return total

    def score_all(self, query_tokens) -> dict:
        """BM25 for every document sharing at least one token with the query."""
        avgdl = self.avg_doc_length
        out = defaultdict(float)
        for tok in query_tokens:
            plist = self.postings.get(tok)
            if not plist:
                continue
            idf = self.idf(tok)
            for doc_id, n in plist:
                out[doc_id] += self._term_score(n, self.doc_lengths[doc_id], avgdl, idf)
        return dict(out)

    def doc_sentiment(self, doc_id, lex: SentimentLexicon) -> float:
        s = self._senti.get(doc_id)
        if s is None:
            if doc_id not in self.texts:
                raise UnknownDocument(doc_id)
            s = senti_doc(self.texts[doc_id], lex)
            self._senti[doc_id] = s
        return s

    # -- persistence --------------------------------------------------------

    def to_dict(self):
        return {
            "version": INDEX_FORMAT_VERSION,
            "k1": self.k1,
            "b": self.b,
            "doc_lengths": dict(sorted(self.doc_lengths.items())),
            "postings": {t: [[d, n] for d, n in p] for t, p in self.postings.items()},
            "texts": dict(sorted(self.texts.items())),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("version") != INDEX_FORMAT_VERSION:
            raise DataError(f"unsupported index version {d.get('version')!r}")
        idx = cls(d["k1"], d["b"])
        idx.doc_lengths = {k: int(v) for k, v in d["doc_lengths"].items()}
        idx.texts = dict(d.get("texts", {}))
        idx.postings = {t: [(doc, int(n)) for doc, n in p] for t, p in d["postings"].items()}
        tf = defaultdict(Counter)
        for t, plist in idx.postings.items():
            for doc, n in plist:
                tf[doc][t] = n
        idx._tf = {doc: tf.get(doc, Counter()) for doc in idx.doc_lengths}
        return idx

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def bm25(doc_id, query_tokens, index: InvertedIndex) -> float:
    return index.score(doc_id, query_tokens)


def rank_score(doc_id, query_tokens, index: InvertedIndex, lex: SentimentLexicon) -> float:
    """BM25 relevance scaled by the review's [0, 1] polarity."""
    return index.score(doc_id, query_tokens) * index.doc_sentiment(doc_id, lex)


def top_k_reviews(query: str, k: int, index: InvertedIndex, lex: SentimentLexicon):
    """The k best documents by rank_score, descending; ties by ascending doc id.

    Only documents with a strictly positive score are returned.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q = tokenize(query)
    scored = []
    for doc_id, s in index.score_all(q).items():
        s *= index.doc_sentiment(doc_id, lex)
        if s > 0.0:
            scored.append((doc_id, s))
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored[:k]


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def entity_documents(reviews) -> dict:
    """One document per entity: its review texts joined in input order."""
    docs = {}
    for r in reviews:
        docs.setdefault(r.entity_id, []).append(r.text)
    return {e: " ".join(texts) for e, texts in docs.items()}


def default_offset(query_tokens, entity_index: InvertedIndex) -> float:
    """Median of the nonzero entity-document BM25 scores for the query (0 when none)."""
    scores = [s for s in entity_index.score_all(query_tokens).values() if s > 0.0]
    return float(median(scores)) if scores else 0.0


def text_retrieval_degree(entity_id, query: str, entity_index: InvertedIndex, c: float) -> float:
    if entity_id not in entity_index:
        raise UnknownEntity(entity_id)
    return sigmoid(entity_index.score(entity_id, tokenize(query)) - c)
