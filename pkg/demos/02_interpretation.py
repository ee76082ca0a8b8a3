"""How free-text predicates become attribute.marker expressions."""

from subjdb import Config, CorpusInputs, SubjectiveDatabase
from subjdb.interpreter import RewriterProfile, optimize_rewriters
from subjdb.synth import SyntheticCorpusSpec, generate_corpus

corpus = generate_corpus(SyntheticCorpusSpec(n_entities=40, reviews_per_entity=15, seed=2))
db = SubjectiveDatabase.build(
    CorpusInputs(corpus.entities, corpus.reviews, corpus.extractions, corpus.schema,
                 corpus.embeddings, corpus.lexicon), Config(seed=2))

# an indexed phrase, a held-out synonym, a context phrase and gibberish
for p in ["clean room", "sparkling linens", "romantic getaway", "xyzzy plugh"]:
    interp = db.interpreter.interpret(p, gate=0.8)
    print(f"{p!r:22} -> {interp.method.value:13s} {interp.confidence:.2f} "
          f"{interp.expr if interp.expr is not None else interp.text}")

# the one-word substitution index answers most near-miss lookups without a full scan
vi = db.vindex
for p in ["very clean room", "really spotless sheets", "tranquil street"]:
    hit = vi.lookup(p)
    print(p, "->", hit.phrase, round(hit.similarity, 3), hit.path)

# choosing a rewriter per term under a time budget
fast = RewriterProfile.from_table("embedding", {t: {"time_ms": 10, "prec": 0.5}
                                                for t in ("a", "b", "c")})
slow = RewriterProfile.from_table("crowd", {t: {"time_ms": 100, "prec": 0.9}
                                            for t in ("a", "b", "c")})
for budget in (30, 120, 300):
    a = optimize_rewriters(["a", "b", "c"], [fast, slow], budget)
    print(budget, a.choice, round(a.average_prec, 3), a.total_time)
