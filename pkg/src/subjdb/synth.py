"""Synthetic hotel-review corpus with planted ground truth.

Every entity has a latent intensity in [0, 1] per subjective attribute.
Reviews realise those intensities as templated opinion sentences; the
embedding table is built so that synonyms (including words that never occur
in reviews) sit in tight clusters along an attribute direction plus a shared
polarity axis. Two attributes also attract context sentences ("ideal for a
romantic getaway") that only a co-occurrence interpreter can connect to them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (AttributeKind, Entity, ExtractionRecord, Review, SubjectiveAttribute,
                   write_jsonl)
from .errors import InvalidSpec
from .text import EmbeddingTable, SentimentLexicon, save_embeddings, save_lexicon, tokenize

LEVEL_SENTIMENT = {2: 0.9, 1: 0.5, -1: -0.5, -2: -0.9}
INTENSIFIERS = ("very", "really", "extremely")
NEGATION = "not"


@dataclass(frozen=True)
class AttributeVocab:
    name: str
    kind: AttributeKind
    aspects: tuple
    held_aspects: tuple
    levels: dict          # level -> (words used in reviews, held-out synonyms)
    context: str = ""     # sentence attached to positive mentions
    context_query: str = ""


BANK = (
    AttributeVocab(
        "room_cleanliness", AttributeKind.LINEAR,
        ("room", "bedroom", "sheets", "carpet", "towels"), ("bedding", "linens"),
        {2: (("spotless", "immaculate", "pristine"), ("sparkling",)),
         1: (("clean", "tidy", "neat"), ("orderly",)),
         -1: (("dusty", "messy", "untidy"), ("grubby",)),
         -2: (("filthy", "dirty", "disgusting"), ("grimy",))}),
    AttributeVocab(
        "staff_service", AttributeKind.LINEAR,
        ("staff", "service", "reception", "receptionist", "concierge"),
        ("employees", "personnel"),
        {2: (("wonderful", "outstanding", "exceptional"), ("superb",)),
         1: (("friendly", "helpful", "polite"), ("courteous",)),
         -1: (("slow", "unhelpful", "indifferent"), ("inattentive",)),
         -2: (("rude", "hostile", "arrogant"), ("insulting",))},
        "Recommended for business travelers.", "business travelers"),
    AttributeVocab(
        "quietness", AttributeKind.LINEAR,
        ("street", "neighbors", "walls", "corridor", "windows"), ("surroundings", "hallway"),
        {2: (("silent", "tranquil", "serene"), ("hushed",)),
         1: (("quiet", "calm", "peaceful"), ("restful",)),
         -1: (("noisy", "loud", "echoing"), ("clamorous",)),
         -2: (("deafening", "unbearable", "chaotic"), ("thunderous",))}),
    AttributeVocab(
        "breakfast", AttributeKind.LINEAR,
        ("breakfast", "buffet", "coffee", "pastries", "food"), ("brunch", "croissants"),
        {2: (("delicious", "exquisite", "scrumptious"), ("divine",)),
         1: (("tasty", "fresh", "good"), ("flavorful",)),
         -1: (("bland", "stale", "mediocre"), ("tasteless",)),
         -2: (("inedible", "awful", "revolting"), ("nauseating",))}),
    AttributeVocab(
        "decor_style", AttributeKind.CATEGORICAL,
        ("decor", "design", "interior", "furniture", "lobby"), ("furnishings", "ambience"),
        {2: (("stunning", "gorgeous", "luxurious"), ("opulent",)),
         1: (("stylish", "charming", "elegant"), ("chic",)),
         -1: (("dated", "tired", "shabby"), ("worn",)),
         -2: (("ugly", "hideous", "tacky"), ("garish",))},
        "Ideal for a romantic getaway.", "romantic getaway"),
)

FILLER = ("We stayed {n} nights.", "The hotel is near the station.",
          "Check in was on time.", "We would come back.", "The location is central.")
STOPWORDS = ("the", "was", "we", "found", "stayed", "nights", "hotel", "is", "near", "station",
             "check", "in", "on", "time", "would", "come", "back", "location", "central",
             "for", "a", "two", "three", "four", "five", "has", "with", "and")
CONTEXT_WORDS = ("ideal", "romantic", "getaway", "recommended", "business", "travelers")
NUMBERS = ("two", "three", "four", "five")
CITIES = ("lisbon", "porto", "madrid", "seville")


@dataclass
class SyntheticCorpusSpec:
    n_entities: int = 100
    reviews_per_entity: int = 20
    n_attributes: int = 5
    markers_per_attribute: int = 10
    mentions_per_review: tuple = (2, 3)
    noise: float = 0.1
    jitter: float = 0.45
    intensity_cut: float = 0.5
    n_labels: int = 1000
    dim: int = 50
    seed: int = 0

    def validate(self):
        if self.n_entities < 1 or self.reviews_per_entity < 1 or self.markers_per_attribute < 2:
            raise InvalidSpec("entity, review and marker counts must be positive (markers >= 2)")
        if not 1 <= self.n_attributes <= len(BANK):
            raise InvalidSpec(f"n_attributes must be in 1..{len(BANK)}")
        lo, hi = self.mentions_per_review
        if not 1 <= lo <= hi <= self.n_attributes:
            raise InvalidSpec("mentions_per_review must satisfy 1 <= lo <= hi <= n_attributes")
        if not 0.0 <= self.noise < 1.0:
            raise InvalidSpec("noise rate must lie in [0, 1)")
        if not 0.0 <= self.intensity_cut <= 1.0 or self.jitter < 0:
            raise InvalidSpec("intensity_cut must lie in [0, 1] and jitter be non-negative")
        if self.dim < len(BANK) + 2:
            raise InvalidSpec(f"dim must be at least {len(BANK) + 2}")
        if self.n_labels < 0:
            raise InvalidSpec("n_labels must be non-negative")


@dataclass
class SyntheticCorpus:
    spec: SyntheticCorpusSpec
    entities: list
    reviews: list
    extractions: list
    schema: list
    embeddings: EmbeddingTable
    lexicon: SentimentLexicon
    predicates: list            # (predicate text, target attribute)
    intensities: dict           # entity id -> {attribute: intensity}
    truth: dict                 # (predicate, entity id) -> 0/1
    labels: list = field(default_factory=list)

    def write(self, out_dir):
        """Write the standard JSONL inputs plus truth, predicates and labels."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "entities.jsonl", (e.to_dict() for e in self.entities))
        write_jsonl(out / "reviews.jsonl", (r.to_dict() for r in self.reviews))
        write_jsonl(out / "extractions.jsonl", (x.to_dict() for x in self.extractions))
        write_jsonl(out / "schema.jsonl", (a.to_dict() for a in self.schema))
        write_jsonl(out / "truth.jsonl", ({"predicate": p, "entity_id": e, "sat": s}
                                          for (p, e), s in sorted(self.truth.items())))
        write_jsonl(out / "predicates.jsonl", ({"predicate": p, "attribute": a}
                                               for p, a in self.predicates))
        write_jsonl(out / "labels.jsonl", self.labels)
        save_embeddings(out / "embeddings.txt", self.embeddings)
        save_lexicon(out / "lexicon.tsv", self.lexicon)


# ---------------------------------------------------------------------------
# Embeddings and lexicon
# ---------------------------------------------------------------------------

def _noise(rng, dim, scale):
    return rng.normal(0.0, scale / np.sqrt(dim), dim)


def build_embeddings(bank, dim, rng):
    basis, _ = np.linalg.qr(rng.normal(size=(dim, len(bank) + 1)))
    polarity = basis[:, -1]
    vectors = {}
    for i, av in enumerate(bank):
        axis = basis[:, i]
        centre = axis + _noise(rng, dim, 0.1)
        for w in av.aspects + av.held_aspects:
            vectors[w] = centre + _noise(rng, dim, 0.2)
        for level, (used, held) in sorted(av.levels.items()):
            c = 0.5 * axis + 1.2 * LEVEL_SENTIMENT[level] * polarity + _noise(rng, dim, 0.1)
            for w in used + held:
                vectors[w] = c + _noise(rng, dim, 0.1)
    vectors[NEGATION] = -0.8 * polarity + _noise(rng, dim, 0.05)
    for w in INTENSIFIERS:
        vectors[w] = _noise(rng, dim, 0.15)
    for w in STOPWORDS + CITIES:
        vectors[w] = _noise(rng, dim, 0.2)
    for w in CONTEXT_WORDS:
        vectors[w] = _noise(rng, dim, 1.0)
    return EmbeddingTable({w: v for w, v in sorted(vectors.items())}, dim)


def build_lexicon(bank):
    scores = {}
    for av in bank:
        for level, (used, held) in av.levels.items():
            for w in used + held:
                scores[w] = LEVEL_SENTIMENT[level]
    return SentimentLexicon(dict(sorted(scores.items())))


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

def benchmark_predicates(bank):
    """Six positive predicates per attribute, mixing review words and held-out synonyms."""
    out = []
    for av in bank:
        pos1, held1 = av.levels[1]
        pos2, held2 = av.levels[2]
        a, ha = av.aspects, av.held_aspects
        preds = [f"{pos1[0]} {a[0]}",
                 f"{pos2[0]} {a[1]}",
                 f"very {pos1[1]} {a[2]}",
                 f"{held1[0]} {ha[0]}",
                 f"{held2[0]} {a[3]}",
                 f"really {held2[0]} {ha[1]}"]
        if av.context_query:
            preds[-1] = av.context_query
        out.extend((p, av.name) for p in preds)
    return out


# ---------------------------------------------------------------------------
# Reviews and extraction
# ---------------------------------------------------------------------------

def _level(intensity, rng, spec):
    if rng.random() < spec.noise:
        s = rng.uniform(-1.0, 1.0)
    else:
        s = 2.0 * intensity - 1.0 + rng.uniform(-spec.jitter, spec.jitter)
    if s >= 0.5:
        return 2
    if s >= 0.0:
        return 1
    if s >= -0.5:
        return -1
    return -2


def _opinion(av, level, rng):
    if level == -1 and rng.random() < 0.3:
        return f"{NEGATION} {rng.choice(av.levels[1][0])}"
    word = str(rng.choice(av.levels[level][0]))
    if rng.random() < 0.2:
        return f"{rng.choice(INTENSIFIERS)} {word}"
    return word


def _sentence(aspect, opinion, rng):
    form = int(rng.integers(3))
    if form == 0:
        return f"The {aspect} was {opinion}."
    if form == 1:
        return f"{opinion.capitalize()} {aspect}."
    return f"We found the {aspect} {opinion}."


def extract_pairs(text, aspect_vocab, opinion_vocab):
    """Pair every aspect word with the nearest opinion word in its sentence.

    The opinion term keeps up to two preceding negators/intensifiers.
    Returns (aspect term, opinion term) pairs in order of appearance.
    """
    modifiers = set(INTENSIFIERS) | {NEGATION}
    pairs = []
    for sentence in text.split("."):
        toks = tokenize(sentence)
        ops = [j for j, t in enumerate(toks) if t in opinion_vocab]
        if not ops:
            continue
        for i, t in enumerate(toks):
            if t not in aspect_vocab:
                continue
            j = min(ops, key=lambda j: (abs(j - i), j))
            start = j
            while start > 0 and j - start < 2 and toks[start - 1] in modifiers:
                start -= 1
            pairs.append((t, " ".join(toks[start:j + 1])))
    return pairs


def generate_corpus(spec: SyntheticCorpusSpec | None = None) -> SyntheticCorpus:
    """Deterministic corpus for a spec; same seed, same bytes."""
    spec = spec or SyntheticCorpusSpec()
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    bank = BANK[:spec.n_attributes]
    emb = build_embeddings(bank, spec.dim, rng)
    lex = build_lexicon(bank)
    aspect_vocab = {w for av in bank for w in av.aspects}
    opinion_vocab = {w for av in bank for used, _ in av.levels.values() for w in used}

    width = len(str(spec.n_entities - 1))
    entities, reviews, extractions, intensities = [], [], [], {}
    for n in range(spec.n_entities):
        eid = f"h{n:0{width}d}"
        inten = {av.name: float(rng.random()) for av in bank}
        intensities[eid] = inten
        entities.append(Entity(eid, {"price_pn": int(rng.integers(60, 400)),
                                     "stars": int(rng.integers(2, 6)),
                                     "city": str(rng.choice(CITIES))}))
        for r in range(spec.reviews_per_entity):
            rid = f"r{r:03d}"
            lo, hi = spec.mentions_per_review
            m = int(rng.integers(lo, hi + 1))
            chosen = sorted(rng.choice(len(bank), size=m, replace=False))
            sentences = []
            for ai in chosen:
                av = bank[ai]
                level = _level(inten[av.name], rng, spec)
                sentences.append(_sentence(str(rng.choice(av.aspects)), _opinion(av, level, rng),
                                           rng))
                if av.context and level > 0 and rng.random() < 0.8:
                    sentences.append(av.context)
            if rng.random() < 0.5:
                sentences.append(str(rng.choice(FILLER)).format(n=rng.choice(NUMBERS)))
            text = " ".join(sentences)
            date = f"2019-{int(rng.integers(1, 13)):02d}-{int(rng.integers(1, 29)):02d}"
            reviews.append(Review(eid, rid, text, date))
            for aspect, opinion in extract_pairs(text, aspect_vocab, opinion_vocab):
                extractions.append(ExtractionRecord(eid, rid, aspect, opinion))

    schema = [SubjectiveAttribute(av.name, av.kind, (),
                                  (av.aspects[0], av.aspects[1]),
                                  (av.levels[1][0][0], av.levels[-1][0][0]))
              for av in bank]
    predicates = benchmark_predicates(bank)
    truth = {(p, e.id): int(intensities[e.id][a] > spec.intensity_cut)
             for p, a in predicates for e in entities}
    target = dict(predicates)
    grid = [(p, e.id) for p, _ in predicates for e in entities]
    n_labels = min(spec.n_labels, len(grid))
    picks = sorted(rng.choice(len(grid), size=n_labels, replace=False)) if n_labels else []
    labels = [{"entity_id": grid[i][1], "attribute": target[grid[i][0]],
               "phrase": grid[i][0], "label": truth[grid[i]]} for i in picks]
    return SyntheticCorpus(spec, entities, reviews, extractions, schema, emb, lex, predicates,
                           intensities, truth, labels)
