"""A built subjective database: schema with markers, marker summaries, indexes,
membership models and an interpreter, plus on-disk build artifacts."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median

import numpy as np

from .config import Config
from .core import (MarkerSummary, load_entities, load_extractions, load_reviews, load_schema,
                   read_jsonl, validate_schema, write_jsonl)
from .errors import DataError, DegenerateLabels, DomainTooSmall
from .interpreter import Interpreter, InterpreterConfig, VariationIndex
from .membership import (LabeledMembershipExample, MembershipModel, TrainingConfig,
                         load_models, mf, save_models, train)
from .retrieval import InvertedIndex, default_offset, entity_documents, text_retrieval_degree
from .schema_builder import (MarkerAssigner, SeedSet, aggregate_summaries, attribute_centroids,
                             build_training_set, classify_extractions, expand_seeds,
                             generate_markers, linguistic_domains)
from .text import (EmbeddingTable, IdfTable, SentimentLexicon, TextModel, build_idf,
                   load_embeddings, load_lexicon, tokenize)

INPUT_FILES = {
    "entities": "entities.jsonl",
    "reviews": "reviews.jsonl",
    "extractions": "extractions.jsonl",
    "schema": "schema.jsonl",
    "embeddings": "embeddings.txt",
    "lexicon": "lexicon.tsv",
}
LABELS_FILE = "labels.jsonl"
TRUTH_FILE = "truth.jsonl"
BUILD_DIR = "build"
ARTIFACT_FILES = ("schema.jsonl", "summaries.jsonl", "models.json", "variations.json",
                  "review_index.json", "entity_index.json", "idf.json", "report.json")


class ValidationFailed(DataError):
    def __init__(self, report):
        self.report = report
        super().__init__("validation failed:\n  " + "\n  ".join(report.violations))


@dataclass
class CorpusInputs:
    entities: list
    reviews: list
    extractions: list
    schema: list
    embeddings: EmbeddingTable
    lexicon: SentimentLexicon
    labels: list | None = None

    @classmethod
    def load(cls, data_dir):
        data_dir = Path(data_dir)
        for key, name in INPUT_FILES.items():
            if not (data_dir / name).exists():
                raise DataError(f"missing input file {name} ({key})", data_dir / name)
        labels = None
        if (data_dir / LABELS_FILE).exists():
            labels = [obj for _, obj in read_jsonl(data_dir / LABELS_FILE)]
        return cls(load_entities(data_dir / INPUT_FILES["entities"]),
                   load_reviews(data_dir / INPUT_FILES["reviews"]),
                   load_extractions(data_dir / INPUT_FILES["extractions"]),
                   load_schema(data_dir / INPUT_FILES["schema"]),
                   load_embeddings(data_dir / INPUT_FILES["embeddings"]),
                   load_lexicon(data_dir / INPUT_FILES["lexicon"]),
                   labels)


def review_doc_id(entity_id, review_id):
    return f"{entity_id}/{review_id}"


@dataclass
class BuildReport:
    counts: dict = field(default_factory=dict)
    rejected_extractions: int = 0
    skipped_phrases: list = field(default_factory=list)
    findings: list = field(default_factory=list)

    def to_dict(self):
        return {"counts": self.counts, "rejected_extractions": self.rejected_extractions,
                "skipped_phrases": self.skipped_phrases, "findings": self.findings}


class SubjectiveDatabase:
    """Everything query evaluation reads. Construct with :meth:`build` or :meth:`load`."""

    def __init__(self, config: Config, entities, reviews, extractions, attributes, text,
                 summaries, models, review_index, entity_index, vindex, report=None):
        self.config = config
        self.relation = config.relation
        self.entities = sorted(entities, key=lambda e: e.id)
        self.reviews = reviews
        self.extractions = extractions
        self.attributes = {a.name: a for a in attributes}
        self.text = text
        self.summaries = summaries
        self.models = models
        self.review_index = review_index
        self.entity_index = entity_index
        self.vindex = vindex
        self.report = report or BuildReport()
        self.assigners = {a.name: MarkerAssigner(a) for a in attributes}
        self._entity_ids = {e.id for e in self.entities}
        self._by_entity = None
        self.interpreter = self._make_interpreter()

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, inputs: CorpusInputs, config: Config | None = None):
        config = config or Config()
        report = BuildReport()
        pre = validate_schema(inputs.schema, inputs.entities, inputs.reviews, inputs.extractions,
                              require_markers=False)
        if pre:
            raise ValidationFailed(pre)

        idf = build_idf(tokenize(r.text) for r in inputs.reviews)
        text = TextModel(inputs.embeddings, idf, inputs.lexicon)
        schema = list(inputs.schema)

        extractions = list(inputs.extractions)
        if any(x.attribute is None for x in extractions):
            seeds = [expand_seeds(SeedSet.of(a), text.emb, idf, config.seed_expansion)
                     for a in schema]
            centroids = attribute_centroids(build_training_set(seeds), text.emb, idf)
            extractions, report.rejected_extractions = classify_extractions(
                extractions, centroids, text, config.classify_threshold)

        domains = linguistic_domains(extractions)
        built = []
        for attr in schema:
            if attr.markers:
                built.append(attr)
                continue
            domain = [p for p in domains.get(attr.name, []) if text.try_rep(p) is not None]
            k = min(config.marker_k, len(domain))
            if k < 2:
                raise DomainTooSmall(f"attribute {attr.name!r} has {len(domain)} representable "
                                     "phrases; at least 2 are needed for markers")
            if k < config.marker_k:
                report.findings.append(f"{attr.name}: only {k} markers (domain size {len(domain)})")
            built.append(attr.with_markers(generate_markers(attr, domain, k, text, config.seed)))

        post = validate_schema(built, inputs.entities, inputs.reviews, extractions, dim=text.dim)
        if post:
            raise ValidationFailed(post)

        dates = {(r.entity_id, r.review_id): r.date for r in inputs.reviews}
        agg = aggregate_summaries(extractions, built, text, config.date_range, dates,
                                  [e.id for e in inputs.entities])
        report.skipped_phrases = sorted({f"{rec.phrase} ({why})" for rec, why in agg.skipped})

        review_index = InvertedIndex.build(
            (review_doc_id(r.entity_id, r.review_id), r.text) for r in inputs.reviews)
        entity_index = InvertedIndex.build(sorted(entity_documents(inputs.reviews).items()),
                                           keep_text=False)
        # entities without reviews still need an (empty) document
        for e in inputs.entities:
            if e.id not in entity_index:
                entity_index.doc_lengths[e.id] = 0
                entity_index._tf[e.id] = {}

        assigners = {a.name: MarkerAssigner(a) for a in built}
        vindex = VariationIndex.build({a: domains.get(a, []) for a in sorted(assigners)},
                                      assigners, text)
        db = cls(config, inputs.entities, inputs.reviews, extractions, built, text, agg.summaries,
                 {}, review_index, entity_index, vindex, report)
        db.models = db._train_models(inputs.labels)
        report.counts = {"entities": len(inputs.entities), "reviews": len(inputs.reviews),
                         "extractions": len(inputs.extractions),
                         "classified_extractions": len(extractions),
                         "attributes": len(built),
                         "markers": {a.name: len(a.markers) for a in built},
                         "summaries": len(agg.summaries),
                         "variations": len(vindex)}
        return db

    def _make_interpreter(self):
        c = self.config
        icfg = InterpreterConfig(c.w2v_threshold, c.combined_threshold, c.cooc_k, c.cooc_n,
                                 c.conj_threshold, c.score_threshold, c.fast_lookup)
        order = {a: list(attr.marker_names) for a, attr in self.attributes.items()}
        return Interpreter(self.vindex, self.review_index, self.extraction_lookup(), self.text.lex,
                           icfg, order)

    def extraction_lookup(self) -> dict:
        """Review doc id to the (attribute, marker) pairs extracted from it."""
        out = defaultdict(list)
        for x in self.extractions:
            if x.attribute not in self.assigners:
                continue
            v = self.text.try_rep(x.phrase)
            if v is None:
                continue
            out[review_doc_id(x.entity_id, x.review_id)].append(
                (x.attribute, self.assigners[x.attribute].assign(v)))
        return dict(out)

    def _train_models(self, labels):
        c = self.config
        hyper = TrainingConfig(c.learning_rate, c.epochs, c.l2, c.seed)
        if labels:
            examples = self.examples_from_labels(labels)
        else:
            examples = self.pseudo_examples()
            self.report.findings.append("no labels file: membership models trained on "
                                        "sentiment pseudo-labels")
        models = {}
        for name in sorted(self.attributes):
            attr = self.attributes[name]
            try:
                models[name] = train(examples.get(name, []), attr, self.text, hyper)
            except DegenerateLabels:
                k = len(attr.markers) + 5
                models[name] = MembershipModel(name, np.zeros(k), 0.0, attr.marker_names, [])
                self.report.findings.append(f"{name}: single-class labels, constant model 0.5")
        return models

    def examples_from_labels(self, labels) -> dict:
        out = defaultdict(list)
        for i, lab in enumerate(labels):
            attr = lab.get("attribute")
            key = (str(lab.get("entity_id")), attr)
            if attr not in self.attributes or key not in self.summaries:
                raise DataError(f"label #{i} references unknown entity/attribute {key}")
            marker = lab.get("marker") or self.marker_for(attr, lab["phrase"])
            out[attr].append(LabeledMembershipExample(self.summaries[key], lab["phrase"], marker,
                                                      int(lab["label"])))
        return out

    def pseudo_examples(self) -> dict:
        """Label marker phrases by whether the entity's average sentiment is above the median.

        Positive markers take the above-median entities as members; negative
        markers the below-median ones.
        """
        out = defaultdict(list)
        for name, attr in sorted(self.attributes.items()):
            sums = [self.summaries[(e.id, name)] for e in self.entities
                    if self.summaries[(e.id, name)].total > 0]
            if not sums:
                continue
            mid = median(s.avg_sentiment for s in sums)
            for m in attr.markers:
                for s in sums:
                    above = s.avg_sentiment > mid
                    label = above if m.sentiment >= 0 else not above
                    out[name].append(LabeledMembershipExample(s, m.representative_phrase, m.name,
                                                              int(label)))
        return out

    def extractions_of(self, entity_id) -> list:
        if self._by_entity is None:
            self._by_entity = defaultdict(list)
            for x in self.extractions:
                self._by_entity[x.entity_id].append(x)
        return self._by_entity.get(entity_id, [])

    def marker_for(self, attribute, phrase):
        v = self.text.try_rep(phrase)
        if v is None:
            return self.attributes[attribute].markers[0].name
        return self.assigners[attribute].assign(v)

    # -- what query evaluation reads ---------------------------------------

    @property
    def objective_attributes(self) -> set:
        return {k for e in self.entities for k in e.objective_attrs}

    def degree(self, entity_id, attribute, phrase, marker):
        """(degree, evidence-free flag) of ``phrase`` on the entity's summary."""
        s = self.summaries.get((entity_id, attribute))
        if s is None or s.total == 0:
            return self.config.zero_evidence_prior, True
        attr = self.attributes[attribute]
        return mf(self.models[attribute], s, phrase, marker, attr, self.text), False

    def text_offset(self, predicate) -> float:
        if self.config.offset_policy == "fixed":
            return self.config.offset_c
        return default_offset(tokenize(predicate), self.entity_index)

    def text_degree(self, entity_id, predicate, c) -> float:
        return text_retrieval_degree(entity_id, predicate, self.entity_index, c)

    # -- persistence ---------------------------------------------------------

    def save(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "schema.jsonl", (self.attributes[a].to_dict()
                                           for a in sorted(self.attributes)))
        write_jsonl(out / "summaries.jsonl", (self.summaries[k].to_dict()
                                              for k in sorted(self.summaries)))
        save_models(out / "models.json", self.models)
        _dump(out / "variations.json", self.vindex.to_dict())
        self.review_index.save(out / "review_index.json")
        self.entity_index.save(out / "entity_index.json")
        _dump(out / "idf.json", self.text.idf.to_dict())
        _dump(out / "report.json", self.report.to_dict())
        labelled = [x.to_dict() for x in self.extractions]
        write_jsonl(out / "classified_extractions.jsonl", labelled)
        self.config.save(out / "config.toml")

    @classmethod
    def load(cls, data_dir, config: Config | None = None):
        data_dir = Path(data_dir)
        art = data_dir / BUILD_DIR
        for name in ARTIFACT_FILES + ("classified_extractions.jsonl",):
            if not (art / name).exists():
                raise DataError(f"missing build artifact {name}; run `build` first", art / name)
        config = config or Config.load(art / "config.toml")
        emb = load_embeddings(data_dir / INPUT_FILES["embeddings"])
        lex = load_lexicon(data_dir / INPUT_FILES["lexicon"])
        idf = IdfTable.from_dict(json.loads((art / "idf.json").read_text(encoding="utf-8")))
        text = TextModel(emb, idf, lex)
        attributes = load_schema(art / "schema.jsonl")
        summaries = {}
        for _, obj in read_jsonl(art / "summaries.jsonl"):
            s = MarkerSummary.from_dict(obj)
            summaries[(s.entity_id, s.attribute)] = s
        vindex = VariationIndex.from_dict(
            json.loads((art / "variations.json").read_text(encoding="utf-8")), text)
        report = BuildReport(**json.loads((art / "report.json").read_text(encoding="utf-8")))
        return cls(config, load_entities(data_dir / INPUT_FILES["entities"]),
                   load_reviews(data_dir / INPUT_FILES["reviews"]),
                   load_extractions(art / "classified_extractions.jsonl"), attributes, text,
                   summaries, load_models(art / "models.json"),
                   InvertedIndex.load(art / "review_index.json"),
                   InvertedIndex.load(art / "entity_index.json"), vindex, report)


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1), encoding="utf-8")


def artifact_hashes(out_dir) -> dict:
    """SHA-256 of every file in a build directory, for determinism checks."""
    out = Path(out_dir)
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(out.iterdir())
            if p.is_file()}
