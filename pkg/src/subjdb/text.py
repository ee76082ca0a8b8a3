"""Tokenization, embeddings, IDF statistics, phrase vectors and lexicon sentiment."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AllTokensOutOfVocabulary, DataError, EmptyCorpus

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

NEGATORS = frozenset({"not", "no", "never"})


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; everything else is a separator."""
    return _TOKEN_RE.findall(text.lower())


class EmbeddingTable:
    """Token to dense vector map. Tokens are stored lowercase."""

    def __init__(self, vectors: dict, dim: int | None = None):
        if dim is None:
            if not vectors:
                raise ValueError("cannot infer dimension of an empty table")
            dim = len(next(iter(vectors.values())))
        self.dim = int(dim)
        self.vectors = {}
        for tok, vec in vectors.items():
            v = np.asarray(vec, dtype=float)
            if v.shape != (self.dim,):
                raise ValueError(f"vector for {tok!r} has shape {v.shape}, expected ({self.dim},)")
            self.vectors[tok.lower()] = v
        self._tokens = None
        self._matrix = None

    def __contains__(self, token):
        return token in self.vectors

    def __getitem__(self, token):
        return self.vectors[token]

    def __len__(self):
        return len(self.vectors)

    @property
    def tokens(self) -> list[str]:
        if self._tokens is None:
            self._tokens = sorted(self.vectors)
        return self._tokens

    @property
    def matrix(self) -> np.ndarray:
        """Rows aligned with :attr:`tokens`."""
        if self._matrix is None:
            self._matrix = np.array([self.vectors[t] for t in self.tokens]).reshape(-1, self.dim)
        return self._matrix


@dataclass
class IdfTable:
    doc_count: int
    df: dict = field(default_factory=dict)
    idf: dict = field(default_factory=dict)

    @property
    def default(self) -> float:
        """IDF of a token never seen in the corpus (df = 0)."""
        return math.log(self.doc_count + 1) + 1.0

    def __call__(self, token) -> float:
        return self.idf.get(token, self.default)

    def to_dict(self):
        return {"doc_count": self.doc_count, "df": dict(sorted(self.df.items()))}

    @classmethod
    def from_dict(cls, d):
        return idf_from_counts(int(d["doc_count"]), {k: int(v) for k, v in d["df"].items()})


def smoothed_idf(doc_count, df) -> float:
    return math.log((doc_count + 1) / (df + 1)) + 1.0


def idf_from_counts(doc_count, df) -> IdfTable:
    return IdfTable(doc_count, dict(df), {t: smoothed_idf(doc_count, n) for t, n in df.items()})


def build_idf(docs: Iterable[Sequence[str]]) -> IdfTable:
    """Document frequencies over token sequences, smoothed as ln((N+1)/(df+1)) + 1."""
    df = Counter()
    n = 0
    for doc in docs:
        n += 1
        df.update(set(doc))
    if n == 0:
        raise EmptyCorpus("build_idf needs at least one document")
    return idf_from_counts(n, df)


@dataclass
class SentimentLexicon:
    scores: dict

    def __post_init__(self):
        for tok, s in self.scores.items():
            if not -1.0 <= s <= 1.0:
                raise ValueError(f"lexicon score for {tok!r} outside [-1, 1]: {s}")


def rep(phrase: str, emb: EmbeddingTable, idf: IdfTable) -> np.ndarray:
    """IDF-weighted sum of the word vectors of the in-vocabulary tokens of ``phrase``."""
    out = np.zeros(emb.dim)
    hit = False
    for tok in tokenize(phrase):
        vec = emb.vectors.get(tok)
        if vec is None:
            continue
        out += vec * idf(tok)
        hit = True
    if not hit:
        raise AllTokensOutOfVocabulary(phrase)
    return out


def cosine(u, v) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    c = float(np.dot(u, v) / (nu * nv))
    return max(-1.0, min(1.0, c))


def similarity(q: str, p: str, emb: EmbeddingTable, idf: IdfTable) -> float:
    return cosine(rep(q, emb, idf), rep(p, emb, idf))


def senti_phrase(phrase: str, lex: SentimentLexicon) -> float:
    """Mean lexicon score of scored tokens; a token right after not/no/never flips sign."""
    toks = tokenize(phrase)
    scored = []
    for i, tok in enumerate(toks):
        if tok in NEGATORS or tok not in lex.scores:
            continue
        s = lex.scores[tok]
        if i > 0 and toks[i - 1] in NEGATORS:
            s = -s
        scored.append(s)
    if not scored:
        return 0.0
    return sum(scored) / len(scored)


def senti_doc(text: str, lex: SentimentLexicon) -> float:
    """Document polarity rescaled to [0, 1]."""
    return (1.0 + senti_phrase(text, lex)) / 2.0


class TextModel:
    """Embeddings, IDF and lexicon bundled together, with a phrase-vector cache.

    The cache is an optimisation only; :func:`rep` stays the reference.
    """

    def __init__(self, emb: EmbeddingTable, idf: IdfTable, lex: SentimentLexicon):
        self.emb = emb
        self.idf = idf
        self.lex = lex
        self._reps = {}

    @property
    def dim(self):
        return self.emb.dim

    def rep(self, phrase):
        v = self._reps.get(phrase)
        if v is None:
            v = rep(phrase, self.emb, self.idf)
            self._reps[phrase] = v
        return v

    def try_rep(self, phrase):
        try:
            return self.rep(phrase)
        except AllTokensOutOfVocabulary:
            return None

    def similarity(self, q, p):
        return cosine(self.rep(q), self.rep(p))

    def senti(self, phrase):
        return senti_phrase(phrase, self.lex)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def load_embeddings(path) -> EmbeddingTable:
    """Read the word-vector text format: ``token v1 ... vd`` per line.

    An optional ``count dim`` header line is skipped.
    """
    path = Path(path)
    vectors = {}
    dim = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            try:
                vec = [float(x) for x in parts[1:]]
            except ValueError:
                raise DataError("non-numeric vector component", path, lineno) from None
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or dim == 0:
                raise DataError(f"expected {dim} components, got {len(vec)}", path, lineno)
            vectors[parts[0].lower()] = vec
    if not vectors:
        raise DataError("no vectors found", path)
    return EmbeddingTable(vectors, dim)


def save_embeddings(path, emb: EmbeddingTable):
    with Path(path).open("w", encoding="utf-8") as fh:
        for tok in emb.tokens:
            fh.write(tok + " " + " ".join(repr(float(x)) for x in emb.vectors[tok]) + "\n")


def load_lexicon(path) -> SentimentLexicon:
    path = Path(path)
    scores = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise DataError("expected token<TAB>score", path, lineno)
            try:
                s = float(parts[1])
            except ValueError:
                raise DataError(f"bad score {parts[1]!r}", path, lineno) from None
            if not -1.0 <= s <= 1.0:
                raise DataError(f"score {s} outside [-1, 1]", path, lineno)
            scores[parts[0].strip().lower()] = s
    return SentimentLexicon(scores)


def save_lexicon(path, lex: SentimentLexicon):
    with Path(path).open("w", encoding="utf-8") as fh:
        for tok in sorted(lex.scores):
            fh.write(f"{tok}\t{lex.scores[tok]!r}\n")
