"""Build a subjective database from a synthetic corpus and run one query."""

import numpy as np

from subjdb import Config, CorpusInputs, SubjectiveDatabase, evaluate, parse
from subjdb.synth import SyntheticCorpusSpec, generate_corpus

# 40 hotels, 15 reviews each; every hotel has a hidden intensity per attribute
corpus = generate_corpus(SyntheticCorpusSpec(n_entities=40, reviews_per_entity=15, seed=1))
print(corpus.reviews[0].text)
print(corpus.extractions[:3])

inputs = CorpusInputs(corpus.entities, corpus.reviews, corpus.extractions, corpus.schema,
                      corpus.embeddings, corpus.lexicon, corpus.labels)
db = SubjectiveDatabase.build(inputs, Config(seed=1))
print(db.report.counts)

# markers of one linearly ordered attribute, best sentiment first
attr = db.attributes["room_cleanliness"]
for m in attr.markers:
    print(f"{m.name:32s} {m.sentiment:+.2f}")

# the marker summary of one hotel: a histogram over those markers
s = db.summaries[(db.entities[0].id, "room_cleanliness")]
print(s.counts, round(s.avg_sentiment, 3))

q = parse('select * from Hotels h where h.price_pn < 250 and "clean room" and "friendly staff"')
result = evaluate(q, db, k=5)
for row in result.rows:
    print(row.entity_id, round(row.degree, 3), {k: round(v, 3) for k, v in row.conditions.items()})

# compare against the hidden intensities the generator planted
top = result.entity_ids
inten = np.array([[corpus.intensities[e]["room_cleanliness"],
                   corpus.intensities[e]["staff_service"]] for e in top])
print(inten.round(2))
