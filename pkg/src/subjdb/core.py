"""Domain vocabulary: entities, reviews, extractions, attributes, markers,
marker summaries, fuzzy expressions and interpretations.

Everything here is immutable except :class:`MarkerSummary`, which is
updated in place by a single writer while the database is being built.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError


def make_phrase(opinion_term: str, aspect_term: str) -> str:
    """Canonical phrase for an (aspect, opinion) pair: opinion first."""
    return f"{opinion_term.strip()} {aspect_term.strip()}".lower()


@dataclass(frozen=True)
class Entity:
    id: str
    objective_attrs: dict = field(default_factory=dict)

    def to_dict(self):
        return {"id": self.id, "attrs": dict(self.objective_attrs)}

    @classmethod
    def from_dict(cls, d):
        return cls(id=str(d["id"]), objective_attrs=dict(d.get("attrs", {})))


@dataclass(frozen=True)
class Review:
    entity_id: str
    review_id: str
    text: str
    date: str | None = None

    def to_dict(self):
        d = {"entity_id": self.entity_id, "review_id": self.review_id, "text": self.text}
        if self.date is not None:
            d["date"] = self.date
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(str(d["entity_id"]), str(d["review_id"]), d["text"], d.get("date"))


@dataclass(frozen=True)
class ExtractionRecord:
    entity_id: str
    review_id: str
    aspect_term: str
    opinion_term: str
    attribute: str | None = None
    phrase: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "phrase", make_phrase(self.opinion_term, self.aspect_term))

    def with_attribute(self, attribute):
        return ExtractionRecord(self.entity_id, self.review_id, self.aspect_term,
                                self.opinion_term, attribute)

    def to_dict(self):
        d = {"entity_id": self.entity_id, "review_id": self.review_id,
             "aspect": self.aspect_term, "opinion": self.opinion_term}
        if self.attribute is not None:
            d["attribute"] = self.attribute
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(str(d["entity_id"]), str(d["review_id"]), d["aspect"], d["opinion"],
                   d.get("attribute"))


class AttributeKind(str, enum.Enum):
    LINEAR = "LinearlyOrdered"
    CATEGORICAL = "Categorical"

    @classmethod
    def parse(cls, value):
        v = str(value).strip().lower()
        if v in ("linear", "linearlyordered", "linearly_ordered", "linearly-ordered"):
            return cls.LINEAR
        if v in ("categorical", "category"):
            return cls.CATEGORICAL
        raise ValueError(f"unknown attribute kind {value!r}")


@dataclass(frozen=True, eq=False)
class Marker:
    name: str
    representative_phrase: str
    embedding: np.ndarray
    sentiment: float

    def __eq__(self, other):
        if not isinstance(other, Marker):
            return NotImplemented
        return (self.name == other.name
                and self.representative_phrase == other.representative_phrase
                and self.sentiment == other.sentiment
                and np.array_equal(self.embedding, other.embedding))

    def to_dict(self):
        return {"name": self.name, "phrase": self.representative_phrase,
                "embedding": [float(x) for x in self.embedding],
                "sentiment": float(self.sentiment)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["phrase"], np.asarray(d["embedding"], dtype=float),
                   float(d["sentiment"]))


@dataclass(frozen=True)
class SubjectiveAttribute:
    name: str
    kind: AttributeKind
    markers: tuple = ()
    aspect_seeds: tuple = ()
    opinion_seeds: tuple = ()

    @property
    def marker_names(self):
        return [m.name for m in self.markers]

    def marker(self, name):
        for m in self.markers:
            if m.name == name:
                return m
        raise KeyError(name)

    def with_markers(self, markers):
        return SubjectiveAttribute(self.name, self.kind, tuple(markers),
                                   self.aspect_seeds, self.opinion_seeds)

    def to_dict(self):
        return {"name": self.name, "kind": self.kind.value,
                "seeds": {"aspects": list(self.aspect_seeds),
                          "opinions": list(self.opinion_seeds)},
                "markers": [m.to_dict() for m in self.markers]}

    @classmethod
    def from_dict(cls, d):
        # accepts both {seeds: {aspects, opinions}} and the flat seeds-file layout
        seeds = d.get("seeds", d)
        return cls(
            name=d["name"],
            kind=AttributeKind.parse(d.get("kind", "linear")),
            markers=tuple(Marker.from_dict(m) for m in d.get("markers", [])),
            aspect_seeds=tuple(seeds.get("aspects", ())),
            opinion_seeds=tuple(seeds.get("opinions", ())),
        )


@dataclass(eq=False)
class MarkerSummary:
    """Histogram of an entity's phrases over one attribute's markers.

    Means are maintained as running means so that building in one batch
    and building by repeated :meth:`add` perform the same float operations.
    """

    entity_id: str
    attribute: str
    counts: dict
    total: int = 0
    avg_sentiment: float = 0.0
    centroid: np.ndarray = None
    per_marker_sentiment: dict = None

    @classmethod
    def empty(cls, entity_id, attribute, marker_names, dim):
        return cls(entity_id, attribute, {m: 0 for m in marker_names}, 0, 0.0,
                   np.zeros(dim), {m: 0.0 for m in marker_names})

    def add(self, marker_name, sentiment, vector):
        if marker_name not in self.counts:
            raise KeyError(f"{marker_name!r} is not a marker of {self.attribute}")
        self.total += 1
        n = self.total
        self.avg_sentiment += (sentiment - self.avg_sentiment) / n
        self.centroid = self.centroid + (np.asarray(vector, dtype=float) - self.centroid) / n
        self.counts[marker_name] += 1
        c = self.counts[marker_name]
        prev = self.per_marker_sentiment[marker_name]
        self.per_marker_sentiment[marker_name] = prev + (sentiment - prev) / c

    def copy(self):
        return MarkerSummary(self.entity_id, self.attribute, dict(self.counts), self.total,
                             self.avg_sentiment, self.centroid.copy(),
                             dict(self.per_marker_sentiment))

    def fractions(self, marker_names):
        if self.total == 0:
            return np.zeros(len(marker_names))
        return np.array([self.counts[m] / self.total for m in marker_names])

    def __eq__(self, other):
        if not isinstance(other, MarkerSummary):
            return NotImplemented
        return (self.entity_id == other.entity_id and self.attribute == other.attribute
                and self.counts == other.counts and self.total == other.total
                and self.avg_sentiment == other.avg_sentiment
                and np.array_equal(self.centroid, other.centroid)
                and self.per_marker_sentiment == other.per_marker_sentiment)

    def to_dict(self):
        return {"entity_id": self.entity_id, "attribute": self.attribute,
                "counts": dict(self.counts), "total": self.total,
                "avg_sentiment": float(self.avg_sentiment),
                "centroid": [float(x) for x in self.centroid],
                "per_marker_sentiment": {k: float(v) for k, v in self.per_marker_sentiment.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["entity_id"], d["attribute"], {k: int(v) for k, v in d["counts"].items()},
                   int(d["total"]), float(d["avg_sentiment"]),
                   np.asarray(d["centroid"], dtype=float),
                   {k: float(v) for k, v in d["per_marker_sentiment"].items()})


# ---------------------------------------------------------------------------
# Fuzzy expressions
# ---------------------------------------------------------------------------

COMPARATORS = ("<", "<=", ">", ">=", "=", "!=")


@dataclass(frozen=True)
class ObjectiveLeaf:
    attr: str
    op: str
    literal: float | str

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")


@dataclass(frozen=True)
class SubjectiveLeaf:
    attribute: str
    phrase: str
    marker: str | None = None


@dataclass(frozen=True)
class NLPredicate:
    """A quoted natural-language condition that has not been interpreted yet."""

    text: str


@dataclass(frozen=True)
class And:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("And needs at least two children")


@dataclass(frozen=True)
class Or:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children")


@dataclass(frozen=True)
class Not:
    child: object


def expr_to_dict(e):
    if isinstance(e, ObjectiveLeaf):
        return {"type": "objective", "attr": e.attr, "op": e.op, "literal": e.literal}
    if isinstance(e, SubjectiveLeaf):
        return {"type": "subjective", "attribute": e.attribute, "phrase": e.phrase,
                "marker": e.marker}
    if isinstance(e, NLPredicate):
        return {"type": "nl", "text": e.text}
    if isinstance(e, And):
        return {"type": "and", "children": [expr_to_dict(c) for c in e.children]}
    if isinstance(e, Or):
        return {"type": "or", "children": [expr_to_dict(c) for c in e.children]}
    if isinstance(e, Not):
        return {"type": "not", "child": expr_to_dict(e.child)}
    raise TypeError(f"not a fuzzy expression: {e!r}")


def expr_from_dict(d):
    t = d["type"]
    if t == "objective":
        return ObjectiveLeaf(d["attr"], d["op"], d["literal"])
    if t == "subjective":
        return SubjectiveLeaf(d["attribute"], d["phrase"], d.get("marker"))
    if t == "nl":
        return NLPredicate(d["text"])
    if t == "and":
        return And(tuple(expr_from_dict(c) for c in d["children"]))
    if t == "or":
        return Or(tuple(expr_from_dict(c) for c in d["children"]))
    if t == "not":
        return Not(expr_from_dict(d["child"]))
    raise ValueError(f"unknown expression node type {t!r}")


def iter_leaves(e) -> Iterator:
    if isinstance(e, (And, Or)):
        for c in e.children:
            yield from iter_leaves(c)
    elif isinstance(e, Not):
        yield from iter_leaves(e.child)
    else:
        yield e


class Method(str, enum.Enum):
    WORD2VEC = "Word2Vec"
    COOCCURRENCE = "CoOccurrence"
    TEXT_RETRIEVAL = "TextRetrieval"


@dataclass(frozen=True)
class Interpretation:
    """Either a fuzzy expression over attribute.marker leaves or a text fallback."""

    method: Method
    confidence: float
    expr: object = None
    text: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if (self.expr is None) == (self.text is None):
            raise ValueError("exactly one of expr / text must be set")

    @property
    def is_fallback(self):
        return self.expr is None

    @property
    def attributes(self):
        """Attributes referenced by the expression, in leaf order."""
        if self.expr is None:
            return []
        return [leaf.attribute for leaf in iter_leaves(self.expr)]

    def to_dict(self):
        d = {"method": self.method.value, "confidence": float(self.confidence)}
        if self.expr is not None:
            d["expr"] = expr_to_dict(self.expr)
        else:
            d["text"] = self.text
        return d

    @classmethod
    def from_dict(cls, d):
        expr = expr_from_dict(d["expr"]) if "expr" in d else None
        return cls(Method(d["method"]), float(d["confidence"]), expr, d.get("text"))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, message):
        self.violations.append(message)

    def __bool__(self):
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def validate_schema(schema: Sequence[SubjectiveAttribute], entities, reviews, extractions,
                    dim=None, require_markers=True) -> ValidationReport:
    """Collect every consistency violation; an empty report means the database is consistent.

    ``require_markers=False`` checks a schema whose markers have not been
    generated yet.
    """
    report = ValidationReport()
    entity_ids = set()
    for e in entities:
        if e.id in entity_ids:
            report.add(f"duplicate entity id {e.id!r}")
        entity_ids.add(e.id)

    review_keys = set()
    for r in reviews:
        key = (r.entity_id, r.review_id)
        if key in review_keys:
            report.add(f"duplicate review {key}")
        review_keys.add(key)
        if not r.text:
            report.add(f"review {key} has empty text")
        if r.entity_id not in entity_ids:
            report.add(f"review {key} references missing entity {r.entity_id!r}")

    attr_names = set()
    for a in schema:
        if a.name in attr_names:
            report.add(f"duplicate attribute {a.name!r}")
        attr_names.add(a.name)
        if require_markers or a.markers:
            if len(a.markers) < 2:
                report.add(f"attribute {a.name!r}: markers < 2")
            names = [m.name for m in a.markers]
            if len(set(names)) != len(names):
                report.add(f"attribute {a.name!r}: duplicate marker names")
            for m in a.markers:
                if dim is not None and len(m.embedding) != dim:
                    report.add(f"attribute {a.name!r}: marker {m.name!r} embedding has "
                               f"dimension {len(m.embedding)}, expected {dim}")
            if a.kind is AttributeKind.LINEAR:
                sents = [m.sentiment for m in a.markers]
                if any(x < y for x, y in zip(sents, sents[1:])):
                    report.add(f"attribute {a.name!r}: linear markers not sorted by "
                               "descending sentiment")

    for i, x in enumerate(extractions):
        if (x.entity_id, x.review_id) not in review_keys:
            report.add(f"extraction #{i} ({x.entity_id}, {x.review_id}) references a missing review")
        if not x.aspect_term.strip() or not x.opinion_term.strip():
            report.add(f"extraction #{i} has an empty aspect or opinion term")
        if x.attribute is not None and x.attribute not in attr_names:
            report.add(f"extraction #{i} labelled with unknown attribute {x.attribute!r}")
    return report


# ---------------------------------------------------------------------------
# JSONL input/output
# ---------------------------------------------------------------------------

def read_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line number, object) pairs; blank lines are skipped."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(obj, dict):
                raise DataError("expected a JSON object", path, lineno)
            yield lineno, obj


def write_jsonl(path, objects: Iterable[dict]):
    with Path(path).open("w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def _load(path, factory):
    out = []
    for lineno, obj in read_jsonl(path):
        try:
            out.append(factory(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad record: {exc!r}", path, lineno) from None
    return out


def load_entities(path):
    return _load(path, Entity.from_dict)


def load_reviews(path):
    return _load(path, Review.from_dict)


def load_extractions(path):
    return _load(path, ExtractionRecord.from_dict)


def load_schema(path):
    return _load(path, SubjectiveAttribute.from_dict)
