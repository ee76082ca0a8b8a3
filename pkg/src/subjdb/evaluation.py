"""Workload quality metrics, IR and hard-threshold baselines, and timing of the
summary path against raw extraction scans."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import MarkerSummary, SubjectiveLeaf, iter_leaves
from .errors import AllTokensOutOfVocabulary, MissingTruth
from .interpreter import normalize_phrase
from .membership import TrainingConfig, featurize_examples, mf, train
from .query import evaluate, evaluate_hard, parse
from .retrieval import InvertedIndex
from .schema_builder import MarkerAssigner, in_date_range
from .text import rep, senti_phrase, tokenize

WORKLOAD_SIZES = {"easy": 2, "medium": 4, "hard": 7}


class GroundTruth:
    """sat(predicate, entity) in {0, 1} over a predicate x entity grid."""

    def __init__(self, sat: dict):
        self.sat = dict(sat)

    def __call__(self, predicate, entity_id) -> int:
        try:
            return self.sat[(predicate, entity_id)]
        except KeyError:
            raise MissingTruth((predicate, entity_id)) from None

    @property
    def entities(self):
        return sorted({e for _, e in self.sat})

    @classmethod
    def from_rows(cls, rows):
        return cls({(r["predicate"], str(r["entity_id"])): int(r["sat"]) for r in rows})


def _discount(j):
    return 1.0 / math.log2(j + 1)


def sat_score(predicates: Sequence[str], entities: Sequence[str], truth: GroundTruth) -> float:
    """Sum over ranks j (1-based) of satisfied predicates at j, discounted by log2(j + 1)."""
    return sum(sum(truth(q, e) for q in predicates) * _discount(j)
               for j, e in enumerate(entities, 1))


def sat_max(predicates: Sequence[str], truth: GroundTruth, k: int, entities=None) -> float:
    """Best achievable sat_score with k entities: most-satisfying entities first."""
    pool = truth.entities if entities is None else entities
    counts = sorted((sum(truth(q, e) for q in predicates) for e in pool), reverse=True)
    return sum(c * _discount(j) for j, c in enumerate(counts[:k], 1))


@dataclass
class QualityReport:
    quality: float
    per_query: list
    excluded: list = field(default_factory=list)


def workload_quality(queries: Sequence[Sequence[str]], results: Sequence[Sequence[str]],
                     truth: GroundTruth, k: int = 10) -> QualityReport:
    """Mean of sat / sat_max; queries with sat_max = 0 are excluded and listed."""
    ratios, excluded = [], []
    for i, (q, res) in enumerate(zip(queries, results)):
        best = sat_max(q, truth, k)
        if best <= 0:
            excluded.append(i)
            continue
        ratios.append(sat_score(q, list(res)[:k], truth) / best)
    quality = float(np.mean(ratios)) if ratios else 0.0
    return QualityReport(quality, ratios, excluded)


def ir_baseline(predicates: Sequence[str], entity_index: InvertedIndex, k: int = 10) -> list:
    """Entities ranked by the summed BM25 of each predicate over their review document."""
    totals = {d: 0.0 for d in entity_index.doc_lengths}
    for p in predicates:
        for d, s in entity_index.score_all(tokenize(p)).items():
            totals[d] += s
    ranked = sorted(totals.items(), key=lambda x: (-x[1], x[0]))
    return [(d, s) for d, s in ranked[:k]]


# ---------------------------------------------------------------------------
# Workloads
# ---------------------------------------------------------------------------

def make_workload(predicates: Sequence[str], size: int, n_queries=100, seed=0) -> list:
    """n_queries conjunctive queries of ``size`` distinct predicates drawn uniformly."""
    if size > len(predicates):
        raise ValueError(f"cannot draw {size} distinct predicates from {len(predicates)}")
    rng = np.random.default_rng(seed)
    return [[predicates[i] for i in rng.choice(len(predicates), size=size, replace=False)]
            for _ in range(n_queries)]


def to_sql(relation, predicates) -> str:
    conds = " and ".join(f'"{p}"' for p in predicates)
    return f"select * from {relation} where {conds}"


@dataclass
class WorkloadRun:
    name: str
    method: str
    quality: float
    runtime_s: float
    excluded: int


def run_workload(name, queries, db, truth: GroundTruth, k=10, gate=None,
                 hard_threshold=None) -> list[WorkloadRun]:
    """Quality and runtime of the engine, the IR baseline and the hard-threshold baseline."""
    hard_threshold = db.config.hard_threshold if hard_threshold is None else hard_threshold
    gate = db.config.combined_threshold if gate is None else gate
    runs = []
    methods = {
        "engine": lambda q: evaluate(parse(to_sql(db.relation, q)), db, k=k,
                                     variant=db.config.variant, gate=gate).entity_ids,
        "ir": lambda q: [d for d, _ in ir_baseline(q, db.entity_index, k)],
        "hard": lambda q: evaluate_hard(parse(to_sql(db.relation, q)), db, k=k,
                                        default_threshold=hard_threshold,
                                        variant=db.config.variant, gate=gate).entity_ids,
    }
    for method, fn in methods.items():
        t0 = time.perf_counter()
        results = [fn(q) for q in queries]
        elapsed = time.perf_counter() - t0
        rep_ = workload_quality(queries, results, truth, k)
        runs.append(WorkloadRun(name, method, rep_.quality, elapsed, len(rep_.excluded)))
    return runs


def runs_to_csv(runs: Sequence[WorkloadRun]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "workload", "quality", "runtime_s", "excluded"])
    for r in runs:
        w.writerow([r.method, r.name, f"{r.quality:.4f}", f"{r.runtime_s:.4f}", r.excluded])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Summary path against raw extraction scans
# ---------------------------------------------------------------------------

def raw_summary(db, entity_id, attribute) -> MarkerSummary:
    """Rebuild one marker summary by rescanning the entity's extractions, with no caching."""
    attr = db.attributes[attribute]
    assigner = MarkerAssigner(attr)
    s = MarkerSummary.empty(entity_id, attribute, attr.marker_names, db.text.dim)
    text = db.text
    dates = None
    if db.config.date_range is not None:
        dates = {(r.entity_id, r.review_id): r.date for r in db.reviews}
    for x in db.extractions_of(entity_id):
        if x.attribute != attribute:
            continue
        if dates is not None and not in_date_range(dates.get((x.entity_id, x.review_id)),
                                                    db.config.date_range):
            continue
        try:
            v = rep(x.phrase, text.emb, text.idf)
        except AllTokensOutOfVocabulary:
            continue
        s.add(assigner.assign(v), senti_phrase(x.phrase, text.lex), v)
    return s


def raw_degree(db, entity_id, attribute, phrase, marker):
    s = raw_summary(db, entity_id, attribute)
    if s.total == 0:
        return db.config.zero_evidence_prior
    return mf(db.models[attribute], s, phrase, marker, db.attributes[attribute], db.text)


@dataclass
class TimingResult:
    summary_path_ms: float
    raw_path_ms: float
    speedup: float
    summary_degrees: list
    raw_degrees: list


def timing_compare(workload: Sequence[Sequence[str]], db, gate=None) -> TimingResult:
    """Score every (query, predicate, entity) through precomputed summaries and by rescanning.

    Predicates falling back to text retrieval are skipped on both paths.
    """
    gate = db.config.combined_threshold if gate is None else gate
    leaves = []
    for q in workload:
        for p in q:
            interp = db.interpreter.cached(p, gate)
            if interp.is_fallback:
                continue
            leaves.extend(l for l in iter_leaves(interp.expr) if isinstance(l, SubjectiveLeaf))
    ids = [e.id for e in db.entities]

    t0 = time.perf_counter()
    fast = [db.degree(e, l.attribute, l.phrase, l.marker)[0] for l in leaves for e in ids]
    t1 = time.perf_counter()
    raw = [raw_degree(db, e, l.attribute, l.phrase, l.marker) for l in leaves for e in ids]
    t2 = time.perf_counter()
    s_ms, r_ms = (t1 - t0) * 1e3, (t2 - t1) * 1e3
    return TimingResult(s_ms, r_ms, r_ms / s_ms if s_ms > 0 else math.inf, fast, raw)


# ---------------------------------------------------------------------------
# Interpreter accuracy and the substitution fast path
# ---------------------------------------------------------------------------

def interpretation_accuracy(labelled: Sequence[tuple], db, gate=None) -> dict:
    """Share of (predicate, attribute) pairs whose top attribute is correct.

    ``w2v`` uses the embedding method alone at the base threshold;
    ``combined`` runs the full chain with the embedding answer gated.
    """
    gate = db.config.combined_threshold if gate is None else gate
    interp = db.interpreter
    w2v_ok = comb_ok = 0
    rows = []
    for pred, attr in labelled:
        w = interp.w2v(pred)
        c = interp.interpret(pred, gate)
        w_attr = w.attributes[0] if w is not None else None
        c_attr = c.attributes[0] if not c.is_fallback else None
        w2v_ok += w_attr == attr
        comb_ok += c_attr == attr
        rows.append({"predicate": pred, "target": attr, "w2v": w_attr, "combined": c_attr,
                     "combined_method": c.method.value})
    n = len(labelled) or 1
    return {"w2v": w2v_ok / n, "combined": comb_ok / n, "rows": rows}


def fast_path_stats(queries: Sequence[str], vindex) -> dict:
    """How often the fast path avoids a full scan, and how often it agrees with the scan."""
    avoided = agree = 0
    for q in queries:
        fast = vindex.lookup(q, fast=True)
        slow = vindex.scan(vindex.text.rep(normalize_phrase(q)))
        avoided += fast.path != "scan"
        agree += fast.phrase == slow[0] or abs(fast.similarity - slow[1]) <= 1e-12
    n = len(queries) or 1
    return {"avoided": avoided / n, "agreement": agree / n, "n": len(queries)}


# ---------------------------------------------------------------------------
# Membership accuracy on planted labels
# ---------------------------------------------------------------------------

def membership_accuracy(db, labels: Sequence[dict], test_fraction=0.2, seed=0,
                        hyper=None) -> dict:
    """Train per-attribute models on a random split of ``labels``; pooled test accuracy."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labels))
    n_test = int(round(test_fraction * len(labels)))
    test = [labels[i] for i in sorted(order[:n_test])]
    train_ = [labels[i] for i in sorted(order[n_test:])]
    c = db.config
    hyper = hyper or TrainingConfig(c.learning_rate, c.epochs, c.l2, c.seed)
    by_attr = db.examples_from_labels(train_)
    models = {a: train(by_attr[a], db.attributes[a], db.text, hyper) for a in sorted(by_attr)}
    test_by_attr = db.examples_from_labels(test)
    correct = total = 0
    per_attr = {}
    for a, examples in sorted(test_by_attr.items()):
        x, y = featurize_examples(examples, db.attributes[a], db.text)
        pred = (models[a].predict(x) >= 0.5).astype(float)
        hits = int((pred == y).sum())
        per_attr[a] = hits / len(y)
        correct += hits
        total += len(y)
    return {"accuracy": correct / total if total else 0.0, "per_attribute": per_attr,
            "n_train": len(train_), "n_test": len(test), "models": models}
