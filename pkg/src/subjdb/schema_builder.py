"""From raw extractions to a subjective schema: seed expansion, attribute
classification, marker generation and marker-summary aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (AttributeKind, ExtractionRecord, Marker, MarkerSummary,
                   SubjectiveAttribute, make_phrase)
from .errors import AllTokensOutOfVocabulary, AttributeMismatch, DomainTooSmall
from .text import EmbeddingTable, IdfTable, TextModel, cosine, rep


@dataclass(frozen=True)
class SeedSet:
    attribute: str
    aspects: tuple
    opinions: tuple

    def __post_init__(self):
        if not self.aspects or not self.opinions:
            raise ValueError(f"seed set for {self.attribute!r} needs aspects and opinions")

    @classmethod
    def of(cls, attr: SubjectiveAttribute):
        return cls(attr.name, tuple(attr.aspect_seeds), tuple(attr.opinion_seeds))


@dataclass(frozen=True)
class LabeledPhrase:
    phrase: str
    attribute: str


# ---------------------------------------------------------------------------
# Seed expansion and attribute classification
# ---------------------------------------------------------------------------

def nearest_tokens(token, emb: EmbeddingTable, n, exclude=()):
    """The n tokens with highest cosine to ``token``; ties broken lexicographically."""
    if n <= 0 or token not in emb:
        return []
    m = emb.matrix
    v = emb[token]
    norms = np.linalg.norm(m, axis=1) * np.linalg.norm(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(norms > 0, m @ v / norms, 0.0)
    skip = set(exclude) | {token}
    ranked = sorted((-float(s), t) for t, s in zip(emb.tokens, sims) if t not in skip)
    return [t for _, t in ranked[:n]]


def expand_seeds(seeds: SeedSet, emb: EmbeddingTable, idf: IdfTable | None = None,
                 per_seed: int = 3) -> SeedSet:
    """Add each single-token seed's ``per_seed`` nearest neighbours.

    ``idf`` is accepted for interface symmetry; scaling a single vector does
    not change its cosine neighbours.
    """
    if per_seed < 0:
        raise ValueError("per_seed must be >= 0")

    def grow(terms):
        out = list(terms)
        for t in terms:
            for nb in nearest_tokens(t, emb, per_seed, exclude=out):
                out.append(nb)
        return tuple(out)

    return SeedSet(seeds.attribute, grow(seeds.aspects), grow(seeds.opinions))


def build_training_set(seed_sets: Iterable[SeedSet]) -> list[LabeledPhrase]:
    out = []
    for s in seed_sets:
        for e in s.aspects:
            for p in s.opinions:
                out.append(LabeledPhrase(make_phrase(p, e), s.attribute))
    return out


def attribute_centroids(training: Sequence[LabeledPhrase], emb, idf) -> dict:
    """Mean phrase vector per attribute; unrepresentable phrases are skipped."""
    sums, counts = {}, {}
    for lp in training:
        try:
            v = rep(lp.phrase, emb, idf)
        except AllTokensOutOfVocabulary:
            continue
        if lp.attribute in sums:
            sums[lp.attribute] = sums[lp.attribute] + v
        else:
            sums[lp.attribute] = v.copy()
        counts[lp.attribute] = counts.get(lp.attribute, 0) + 1
    return {a: sums[a] / counts[a] for a in sorted(sums)}


def classify_attribute(phrase, centroids: dict, emb, idf, reject_threshold=0.2,
                       phrase_vec=None):
    """Nearest-centroid label, or None when the best cosine is below the threshold."""
    if phrase_vec is None:
        try:
            phrase_vec = rep(phrase, emb, idf)
        except AllTokensOutOfVocabulary:
            return None
    best, best_sim = None, -np.inf
    for attr in sorted(centroids):
        s = cosine(phrase_vec, centroids[attr])
        if s > best_sim:
            best, best_sim = attr, s
    if best is None or best_sim < reject_threshold:
        return None
    return best


class LogisticAttributeClassifier:
    """One-vs-rest logistic regression over phrase vectors.

    Alternative to nearest-centroid classification; reuses the membership
    trainer.
    """

    def __init__(self, models: dict, reject_threshold=0.0):
        self.models = models
        self.reject_threshold = reject_threshold

    @classmethod
    def fit(cls, training: Sequence[LabeledPhrase], emb, idf, hyper=None, reject_threshold=0.0):
        from .membership import TrainingConfig, fit_logistic
        hyper = hyper or TrainingConfig()
        rows, labels = [], []
        for lp in training:
            try:
                v = rep(lp.phrase, emb, idf)
            except AllTokensOutOfVocabulary:
                continue
            rows.append(v / (np.linalg.norm(v) or 1.0))
            labels.append(lp.attribute)
        x = np.array(rows)
        models = {}
        for attr in sorted(set(labels)):
            y = np.array([1.0 if lab == attr else 0.0 for lab in labels])
            w, b, _ = fit_logistic(x, y, hyper)
            models[attr] = (w, b)
        return cls(models, reject_threshold)

    def predict(self, phrase, emb, idf):
        try:
            v = rep(phrase, emb, idf)
        except AllTokensOutOfVocabulary:
            return None
        v = v / (np.linalg.norm(v) or 1.0)
        best, best_p = None, -1.0
        for attr in sorted(self.models):
            w, b = self.models[attr]
            p = 1.0 / (1.0 + np.exp(-(v @ w + b)))
            if p > best_p:
                best, best_p = attr, p
        return best if best_p >= self.reject_threshold else None


def classify_extractions(records, centroids, text: TextModel, reject_threshold=0.2):
    """Label unlabelled records; returns (labelled records, number rejected)."""
    out, rejected = [], 0
    for r in records:
        if r.attribute is not None:
            out.append(r)
            continue
        attr = classify_attribute(r.phrase, centroids, text.emb, text.idf, reject_threshold,
                                  phrase_vec=text.try_rep(r.phrase))
        if attr is None:
            rejected += 1
        else:
            out.append(r.with_attribute(attr))
    return out, rejected


# ---------------------------------------------------------------------------
# Marker generation
# ---------------------------------------------------------------------------

def linguistic_domains(records: Iterable[ExtractionRecord]) -> dict:
    """Distinct phrases per attribute in first-seen order."""
    seen = {}
    for r in records:
        if r.attribute is None:
            continue
        seen.setdefault(r.attribute, {}).setdefault(r.phrase, None)
    return {a: list(p) for a, p in sorted(seen.items())}


def _dedupe(domain):
    return list(dict.fromkeys(domain))


def marker_name(phrase):
    return phrase.replace(" ", "_")


def bucket_bounds(n, k):
    """Start/stop of k contiguous buckets over n items, sizes differing by at most one."""
    base, extra = divmod(n, k)
    bounds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def generate_markers_linear(domain: Sequence[str], k: int, text: TextModel) -> list[Marker]:
    """Sentiment-sorted buckets; each bucket's (lower-)middle phrase becomes a marker."""
    phrases = _dedupe(domain)
    if k < 2 or len(phrases) < k:
        raise DomainTooSmall(f"need at least k={k} >= 2 distinct phrases, got {len(phrases)}")
    scored = sorted(((text.senti(p), p) for p in phrases), key=lambda sp: (-sp[0], sp[1]))
    markers = []
    for lo, hi in bucket_bounds(len(scored), k):
        s, p = scored[lo + (hi - lo - 1) // 2]
        markers.append(Marker(marker_name(p), p, _marker_vec(p, text), s))
    return markers


def _marker_vec(phrase, text):
    v = text.try_rep(phrase)
    return np.zeros(text.dim) if v is None else v.copy()


def kmeans(x: np.ndarray, k: int, seed=0, max_iter=100, tol=1e-6):
    """Lloyd's algorithm with k-means++ seeding.

    Empty clusters are re-seeded with the point farthest from its current
    centroid. Returns (labels, centroids, iterations).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if k < 1 or n < k:
        raise DomainTooSmall(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))

    labels = np.zeros(n, dtype=int)
    it = 0
    for it in range(1, max_iter + 1):
        dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new[j] = x[members].mean(axis=0)
            else:
                far = int(dist[np.arange(n), labels].argmax())
                new[j] = x[far]
                labels[far] = j
                dist[far] = 0.0
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < tol:
            break
    dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return dist.argmin(axis=1), centers, it


def generate_markers_categorical(domain: Sequence[str], k: int, text: TextModel,
                                 seed=0) -> list[Marker]:
    """k-means over phrase vectors; the phrase nearest each centroid is its marker.

    Markers are listed by descending sentiment, then phrase.
    """
    phrases = [p for p in _dedupe(domain) if text.try_rep(p) is not None]
    if k < 2 or len(phrases) < k:
        raise DomainTooSmall(f"need at least k={k} >= 2 representable phrases, got {len(phrases)}")
    x = np.array([text.rep(p) for p in phrases])
    _, centers, _ = kmeans(x, k, seed=seed)
    chosen = []
    for c in centers:
        order = np.argsort(((x - c) ** 2).sum(axis=1), kind="stable")
        for i in order:
            if phrases[i] not in chosen:
                chosen.append(phrases[i])
                break
    markers = [Marker(marker_name(p), p, text.rep(p).copy(), text.senti(p)) for p in chosen]
    markers.sort(key=lambda m: (-m.sentiment, m.representative_phrase))
    return markers


def generate_markers(attr: SubjectiveAttribute, domain, k, text: TextModel, seed=0):
    if attr.kind is AttributeKind.LINEAR:
        return generate_markers_linear(domain, k, text)
    return generate_markers_categorical(domain, k, text, seed=seed)


# ---------------------------------------------------------------------------
# Marker summaries
# ---------------------------------------------------------------------------

def in_date_range(date, date_range) -> bool:
    """Inclusive ISO-8601 range check; undated reviews are always in range."""
    if date_range is None or date is None:
        return True
    lo, hi = date_range
    return (lo is None or date >= lo) and (hi is None or date <= hi)


class MarkerAssigner:
    """Best-matching marker of one attribute by cosine to the marker embeddings."""

    def __init__(self, attr: SubjectiveAttribute):
        self.attribute = attr.name
        self.names = attr.marker_names
        m = np.array([mk.embedding for mk in attr.markers], dtype=float)
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        self._unit = m / norms

    def assign(self, vec) -> str:
        n = np.linalg.norm(vec)
        sims = self._unit @ (vec / n if n > 0 else vec)
        return self.names[int(np.argmax(sims))]


@dataclass
class AggregationResult:
    summaries: dict
    skipped: list = field(default_factory=list)


class SummaryBuilder:
    """Accumulates extractions into marker summaries, one record at a time.

    Batch aggregation and incremental updates both go through :meth:`add`, so
    they produce identical floats.
    """

    def __init__(self, attributes: Sequence[SubjectiveAttribute], text: TextModel,
                 date_range=None, review_dates=None):
        self.attributes = {a.name: a for a in attributes}
        self.assigners = {a.name: MarkerAssigner(a) for a in attributes}
        self.text = text
        self.date_range = date_range
        self.review_dates = review_dates or {}
        self.summaries = {}
        self.skipped = []

    def summary(self, entity_id, attribute):
        key = (entity_id, attribute)
        s = self.summaries.get(key)
        if s is None:
            s = MarkerSummary.empty(entity_id, attribute, self.attributes[attribute].marker_names,
                                    self.text.dim)
            self.summaries[key] = s
        return s

    def add(self, rec: ExtractionRecord) -> bool:
        """Fold one record in; returns False if it was filtered or skipped."""
        if rec.attribute is None or rec.attribute not in self.attributes:
            self.skipped.append((rec, "unclassified"))
            return False
        date = self.review_dates.get((rec.entity_id, rec.review_id))
        if not in_date_range(date, self.date_range):
            return False
        vec = self.text.try_rep(rec.phrase)
        if vec is None:
            self.skipped.append((rec, "out of vocabulary"))
            return False
        marker = self.assigners[rec.attribute].assign(vec)
        self.summary(rec.entity_id, rec.attribute).add(marker, self.text.senti(rec.phrase), vec)
        return True


def aggregate_summaries(extractions, attributes, text: TextModel, date_range=None,
                        review_dates=None, entity_ids=()) -> AggregationResult:
    """Count each phrase under its attribute's best-matching marker.

    Summaries are created for every (entity in ``entity_ids``, attribute)
    pair even when no phrase lands there.
    """
    builder = SummaryBuilder(attributes, text, date_range, review_dates)
    for e in entity_ids:
        for a in builder.attributes:
            builder.summary(e, a)
    for rec in extractions:
        builder.add(rec)
    return AggregationResult(builder.summaries, builder.skipped)


def update_summary(summary: MarkerSummary, rec: ExtractionRecord, attribute: SubjectiveAttribute,
                   text: TextModel, date_range=None, review_dates=None) -> MarkerSummary:
    """Return a copy of ``summary`` with one more extraction folded in."""
    if rec.attribute != summary.attribute or attribute.name != summary.attribute:
        raise AttributeMismatch(f"extraction for {rec.attribute!r} cannot update a "
                                f"{summary.attribute!r} summary")
    if rec.entity_id != summary.entity_id:
        raise ValueError(f"extraction for entity {rec.entity_id!r} cannot update the summary "
                         f"of {summary.entity_id!r}")
    builder = SummaryBuilder([attribute], text, date_range, review_dates)
    builder.summaries[(summary.entity_id, summary.attribute)] = summary.copy()
    builder.add(rec)
    return builder.summaries[(summary.entity_id, summary.attribute)]
