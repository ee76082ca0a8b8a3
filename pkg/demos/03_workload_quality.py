"""Engine against the IR and hard-threshold baselines on easy/medium/hard workloads."""

from subjdb import Config, CorpusInputs, SubjectiveDatabase
from subjdb.evaluation import (WORKLOAD_SIZES, GroundTruth, make_workload, run_workload,
                               runs_to_csv, timing_compare)
from subjdb.synth import SyntheticCorpusSpec, generate_corpus

corpus = generate_corpus(SyntheticCorpusSpec(seed=0))
# no labels passed: membership models train on sentiment pseudo-labels
db = SubjectiveDatabase.build(
    CorpusInputs(corpus.entities, corpus.reviews, corpus.extractions, corpus.schema,
                 corpus.embeddings, corpus.lexicon), Config(seed=0))
truth = GroundTruth(corpus.truth)
predicates = [p for p, _ in corpus.predicates]

runs = []
for name, size in WORKLOAD_SIZES.items():
    workload = make_workload(predicates, size, n_queries=100, seed=0)
    runs += run_workload(name, workload, db, truth, k=10)
print(runs_to_csv(runs))

t = timing_compare(make_workload(predicates, 4, 50, seed=1), db)
print(f"summary path {t.summary_path_ms:.0f} ms, raw scan {t.raw_path_ms:.0f} ms, "
      f"speedup {t.speedup:.1f}x")
