"""Command-line interface.

JSON (or CSV for ``eval``) goes to stdout, diagnostics to stderr.
Exit codes: 0 success, 1 usage, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import Config
from .core import read_jsonl, validate_schema
from .database import (BUILD_DIR, TRUTH_FILE, CorpusInputs, SubjectiveDatabase,
                       ValidationFailed)
from .errors import (DataError, InvariantViolation, QuerySyntaxError, SubjDBError,
                     UnknownObjectiveAttribute, UnknownRelation)
from .evaluation import WORKLOAD_SIZES, GroundTruth, make_workload, run_workload, runs_to_csv
from .query import evaluate, parse
from .synth import SyntheticCorpusSpec, generate_corpus

log = logging.getLogger("subjdb")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
USAGE_ERRORS = (QuerySyntaxError, UnknownRelation, UnknownObjectiveAttribute)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_config(args, base: Config | None = None) -> Config:
    cfg = base or Config()
    if args.config:
        cfg = Config.load(args.config)
    return cfg.replace(seed=args.seed)


def cmd_generate(args):
    spec = SyntheticCorpusSpec(n_entities=args.entities, reviews_per_entity=args.reviews,
                               noise=args.noise, n_labels=args.labels,
                               seed=args.seed if args.seed is not None else 0)
    corpus = generate_corpus(spec)
    out = Path(args.out or args.data_dir)
    corpus.write(out)
    _emit({"out": str(out), "entities": len(corpus.entities), "reviews": len(corpus.reviews),
           "extractions": len(corpus.extractions), "predicates": len(corpus.predicates),
           "labels": len(corpus.labels)})


def cmd_validate(args):
    inputs = CorpusInputs.load(args.data_dir)
    report = validate_schema(inputs.schema, inputs.entities, inputs.reviews, inputs.extractions,
                             require_markers=False)
    _emit({"valid": not report, "violations": report.violations})
    return EXIT_OK if not report else EXIT_DATA


def cmd_build(args):
    cfg = load_config(args)
    inputs = CorpusInputs.load(args.data_dir)
    db = SubjectiveDatabase.build(inputs, cfg)
    out = Path(args.data_dir) / BUILD_DIR
    db.save(out)
    log.info("artifacts written to %s", out)
    _emit(db.report.to_dict())


def _load_db(args):
    art = Path(args.data_dir) / BUILD_DIR / "config.toml"
    base = Config.load(art) if art.exists() else None
    cfg = load_config(args, base)
    return SubjectiveDatabase.load(args.data_dir, cfg)


def cmd_query(args):
    db = _load_db(args)
    if args.variant:
        db.config = db.config.replace(variant=args.variant)
    q = parse(args.sql)
    k = args.k or db.config.k
    result = evaluate(q, db, k=k, variant=db.config.variant)
    _emit(result.to_dict())


def cmd_interpret(args):
    db = _load_db(args)
    gate = args.gate if args.gate is not None else None
    interp = db.interpreter.interpret(args.predicate, gate)
    out = interp.to_dict()
    out["predicate"] = args.predicate
    _emit(out)


def cmd_eval(args):
    db = _load_db(args)
    data = Path(args.data_dir)
    truth_path, pred_path = data / TRUTH_FILE, data / "predicates.jsonl"
    for p in (truth_path, pred_path):
        if not p.exists():
            raise DataError(f"missing {p.name}; `generate` writes it alongside the inputs", p)
    truth = GroundTruth.from_rows(obj for _, obj in read_jsonl(truth_path))
    predicates = [obj["predicate"] for _, obj in read_jsonl(pred_path)]
    names = list(WORKLOAD_SIZES) if args.workload == "all" else [args.workload]
    runs = []
    for name in names:
        wl = make_workload(predicates, WORKLOAD_SIZES[name], args.queries, db.config.seed)
        runs.extend(run_workload(name, wl, db, truth, k=args.k or db.config.k))
    sys.stdout.write(runs_to_csv(runs))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subjdb", description="Query entities by the opinions in their reviews.")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, help="seed for every random choice (overrides config)")
    p.add_argument("--data-dir", default=".", help="directory holding the JSONL inputs")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic corpus")
    g.add_argument("--out", help="output directory (defaults to --data-dir)")
    g.add_argument("--entities", type=int, default=100)
    g.add_argument("--reviews", type=int, default=20)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--labels", type=int, default=1000)
    g.set_defaults(func=cmd_generate)

    sub.add_parser("validate", help="check inputs for consistency").set_defaults(func=cmd_validate)
    sub.add_parser("build", help="build all artifacts").set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="evaluate a subjective SQL query")
    q.add_argument("--sql", required=True)
    q.add_argument("--k", type=int)
    q.add_argument("--variant", choices=["product", "minmax"])
    q.set_defaults(func=cmd_query)

    i = sub.add_parser("interpret", help="interpret one natural-language predicate")
    i.add_argument("--predicate", required=True)
    i.add_argument("--gate", type=float, help="embedding confidence required before co-occurrence")
    i.set_defaults(func=cmd_interpret)

    e = sub.add_parser("eval", help="workload quality of the engine and baselines as CSV")
    e.add_argument("--workload", choices=list(WORKLOAD_SIZES) + ["all"], default="all")
    e.add_argument("--queries", type=int, default=100)
    e.add_argument("--k", type=int)
    e.set_defaults(func=cmd_eval)
    return p


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        code = args.func(args)
    except USAGE_ERRORS as exc:
        return _fail(EXIT_USAGE, exc)
    except ValueError as exc:
        if isinstance(exc, SubjDBError):
            return _fail(EXIT_DATA, exc)
        return _fail(EXIT_USAGE, exc)
    except InvariantViolation as exc:
        return _fail(EXIT_INTERNAL, exc)
    except (SubjDBError, ValidationFailed, DataError, OSError) as exc:
        return _fail(EXIT_DATA, exc)
    except Exception as exc:  # pragma: no cover - last-resort guard
        log.exception("internal error")
        return _fail(EXIT_INTERNAL, exc)
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
