"""Subjective SQL: parsing, fuzzy algebra and ranked evaluation.

Grammar (keywords case-insensitive, AND binds tighter than OR)::

    query   := SELECT '*' FROM ident [ident] [WHERE expr]
    expr    := conj (OR conj)*
    conj    := unary (AND unary)*
    unary   := NOT unary | '(' expr ')' | term
    term    := ident cmp literal | "free text"
    literal := number | 'string'
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .core import (And, NLPredicate, Not, ObjectiveLeaf, Or, SubjectiveLeaf,
                   iter_leaves)
from .errors import (FuzzyDomainError, QuerySyntaxError, UnknownObjectiveAttribute,
                     UnknownRelation)

# ---------------------------------------------------------------------------
# Lexer and parser
# ---------------------------------------------------------------------------

KEYWORDS = {"select", "from", "where", "and", "or", "not"}

_TOKEN_SPEC = [
    ("WS", r"\s+"),
    ("NUMBER", r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?"),
    ("NL", r'"[^"]*"|“[^”]*”'),
    ("STRING", r"'(?:[^']|'')*'"),
    ("CMP", r"<=|>=|!=|<>|<|>|=|≤|≥|≠"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_.]*"),
    ("STAR", r"\*"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
]
_LEXER = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))
_CMP_ALIASES = {"<>": "!=", "≤": "<=", "≥": ">=", "≠": "!="}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    pos: int


def lex(text: str) -> list[Token]:
    out, pos = [], 0
    while pos < len(text):
        m = _LEXER.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group()
        if kind == "IDENT" and value.lower() in KEYWORDS:
            kind = value.upper()
        if kind != "WS":
            out.append(Token(kind, value, pos))
        pos = m.end()
    out.append(Token("EOF", "", len(text)))
    return out


@dataclass(frozen=True)
class SubjectiveQuery:
    relation: str
    where: object = None
    alias: str | None = None

    @property
    def predicates(self) -> list[str]:
        """Quoted natural-language predicates in order of appearance."""
        if self.where is None:
            return []
        return [leaf.text for leaf in iter_leaves(self.where) if isinstance(leaf, NLPredicate)]


class _Parser:
    def __init__(self, text):
        self.toks = lex(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def expect(self, kind, what):
        t = self.tok
        if t.kind != kind:
            found = t.value or "end of input"
            raise QuerySyntaxError(f"expected {what}, found {found!r}", t.pos)
        self.i += 1
        return t

    def query(self):
        self.expect("SELECT", "'select'")
        self.expect("STAR", "'*'")
        self.expect("FROM", "'from'")
        relation = self.expect("IDENT", "relation name").value
        alias = None
        if self.tok.kind == "IDENT":
            alias = self.tok.value
            self.i += 1
        where = None
        if self.tok.kind == "WHERE":
            self.i += 1
            where = self.expr()
        self.expect("EOF", "end of query")
        return SubjectiveQuery(relation, where, alias)

    def expr(self):
        items = [self.conj()]
        while self.tok.kind == "OR":
            self.i += 1
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self):
        items = [self.unary()]
        while self.tok.kind == "AND":
            self.i += 1
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self):
        t = self.tok
        if t.kind == "NOT":
            self.i += 1
            return Not(self.unary())
        if t.kind == "LPAREN":
            self.i += 1
            e = self.expr()
            self.expect("RPAREN", "')'")
            return e
        if t.kind == "NL":
            self.i += 1
            body = t.value[1:-1].strip()
            if not body:
                raise QuerySyntaxError("empty natural-language predicate", t.pos)
            return NLPredicate(body)
        if t.kind == "IDENT":
            self.i += 1
            op = self.expect("CMP", "comparison operator").value
            op = _CMP_ALIASES.get(op, op)
            return ObjectiveLeaf(_strip_alias(t.value), op, self.literal())
        raise QuerySyntaxError(f"expected a condition, found {t.value or 'end of input'!r}", t.pos)

    def literal(self):
        t = self.tok
        if t.kind == "NUMBER":
            self.i += 1
            return float(t.value)
        if t.kind == "STRING":
            self.i += 1
            return t.value[1:-1].replace("''", "'")
        raise QuerySyntaxError(f"expected a literal, found {t.value or 'end of input'!r}", t.pos)


def _strip_alias(ident):
    return ident.split(".", 1)[1] if "." in ident else ident


def parse(query_text: str) -> SubjectiveQuery:
    return _Parser(query_text).query()


# ---------------------------------------------------------------------------
# Fuzzy algebra
# ---------------------------------------------------------------------------

def _check(*xs):
    for x in xs:
        if not 0.0 <= x <= 1.0:
            raise FuzzyDomainError(f"degree {x!r} outside [0, 1]")


def fuzzy_and(x, y):
    _check(x, y)
    return x * y


def fuzzy_or(x, y):
    _check(x, y)
    return 1.0 - (1.0 - x) * (1.0 - y)


def fuzzy_not(x):
    _check(x)
    return 1.0 - x


def min_and(x, y):
    _check(x, y)
    return min(x, y)


def max_or(x, y):
    _check(x, y)
    return max(x, y)


@dataclass(frozen=True)
class FuzzyVariant:
    name: str
    and_: Callable
    or_: Callable
    not_: Callable = fuzzy_not

    def conj(self, values):
        # sorted so the result does not depend on condition order
        vals = sorted(values)
        acc = vals[0]
        for v in vals[1:]:
            acc = self.and_(acc, v)
        return acc

    def disj(self, values):
        vals = sorted(values)
        acc = vals[0]
        for v in vals[1:]:
            acc = self.or_(acc, v)
        return acc


PRODUCT = FuzzyVariant("product", fuzzy_and, fuzzy_or)
MINMAX = FuzzyVariant("minmax", min_and, max_or)
VARIANTS = {"product": PRODUCT, "minmax": MINMAX}


def evaluate_expr(expr, leaf_degree: Callable, variant: FuzzyVariant = PRODUCT) -> float:
    if isinstance(expr, And):
        return variant.conj([evaluate_expr(c, leaf_degree, variant) for c in expr.children])
    if isinstance(expr, Or):
        return variant.disj([evaluate_expr(c, leaf_degree, variant) for c in expr.children])
    if isinstance(expr, Not):
        return variant.not_(evaluate_expr(expr.child, leaf_degree, variant))
    return leaf_degree(expr)


def compare(value, op, literal) -> bool:
    """Objective comparison; strings support only = and !=."""
    if value is None:
        return False
    if isinstance(value, str) or isinstance(literal, str):
        if op not in ("=", "!="):
            raise TypeError(f"operator {op} is not defined on strings")
        eq = str(value) == str(literal)
        return eq if op == "=" else not eq
    value = float(value)
    literal = float(literal)
    return {"<": value < literal, "<=": value <= literal, ">": value > literal,
            ">=": value >= literal, "=": value == literal, "!=": value != literal}[op]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def condition_key(leaf) -> str:
    if isinstance(leaf, NLPredicate):
        return leaf.text
    if isinstance(leaf, ObjectiveLeaf):
        lit = repr(leaf.literal) if isinstance(leaf.literal, str) else f"{leaf.literal:g}"
        return f"{leaf.attr} {leaf.op} {lit}"
    raise TypeError(leaf)


@dataclass
class RankedRow:
    entity_id: str
    degree: float
    conditions: dict = field(default_factory=dict)
    insufficient_evidence: list = field(default_factory=list)


@dataclass
class RankedResult:
    rows: list
    k: int
    interpretations: dict = field(default_factory=dict)

    @property
    def entity_ids(self):
        return [r.entity_id for r in self.rows]

    def to_dict(self):
        return {"k": self.k,
                "results": [{"entity_id": r.entity_id, "degree": r.degree,
                             "conditions": r.conditions,
                             "insufficient_evidence": r.insufficient_evidence}
                            for r in self.rows],
                "interpretations": {p: i.to_dict() for p, i in self.interpretations.items()}}


def _check_query(query: SubjectiveQuery, db):
    if query.relation.lower() != db.relation.lower():
        raise UnknownRelation(f"unknown relation {query.relation!r}; this database holds "
                              f"{db.relation!r}")
    if query.where is None:
        return
    known = db.objective_attributes
    for leaf in iter_leaves(query.where):
        if isinstance(leaf, ObjectiveLeaf) and leaf.attr not in known:
            raise UnknownObjectiveAttribute(f"unknown objective attribute {leaf.attr!r}")


class _Scorer:
    """Per-query leaf scoring against one database."""

    def __init__(self, db, interpretations: dict):
        self.db = db
        self.interpretations = interpretations
        self.offsets = {}

    def subjective(self, entity_id, leaf: SubjectiveLeaf):
        return self.db.degree(entity_id, leaf.attribute, leaf.phrase, leaf.marker)

    def text(self, entity_id, predicate):
        c = self.offsets.get(predicate)
        if c is None:
            c = self.db.text_offset(predicate)
            self.offsets[predicate] = c
        return self.db.text_degree(entity_id, predicate, c)

    def nl(self, entity_id, text, variant, flags):
        interp = self.interpretations[text]
        if interp.is_fallback:
            return self.text(entity_id, text)

        def leaf_degree(leaf):
            value, empty = self.subjective(entity_id, leaf)
            if empty:
                flags.append(f"{leaf.attribute}")
            return value

        return evaluate_expr(interp.expr, leaf_degree, variant)


def _interpret_all(query, db, gate=None) -> dict:
    return {p: db.interpreter.cached(p, gate) for p in dict.fromkeys(query.predicates)}


def evaluate(query: SubjectiveQuery, db, k=10, variant="product", gate=None) -> RankedResult:
    """Rank entities by the fuzzy degree of the where clause; zero-degree entities drop out."""
    _check_query(query, db)
    fv = VARIANTS[variant] if isinstance(variant, str) else variant
    interps = _interpret_all(query, db, gate)
    scorer = _Scorer(db, interps)
    rows = []
    for ent in db.entities:
        conds, flags = {}, []

        def leaf_degree(leaf, ent=ent, conds=conds, flags=flags):
            if isinstance(leaf, ObjectiveLeaf):
                v = 1.0 if compare(ent.objective_attrs.get(leaf.attr), leaf.op, leaf.literal) else 0.0
            elif isinstance(leaf, NLPredicate):
                v = scorer.nl(ent.id, leaf.text, fv, flags)
            elif isinstance(leaf, SubjectiveLeaf):
                v, empty = scorer.subjective(ent.id, leaf)
                if empty:
                    flags.append(leaf.attribute)
            else:
                raise TypeError(leaf)
            conds[condition_key(leaf) if not isinstance(leaf, SubjectiveLeaf)
                  else f"{leaf.attribute}.{leaf.marker}"] = v
            return v

        degree = 1.0 if query.where is None else evaluate_expr(query.where, leaf_degree, fv)
        if degree > 0.0:
            rows.append(RankedRow(ent.id, degree, conds, sorted(set(flags))))
    rows.sort(key=lambda r: (-r.degree, r.entity_id))
    return RankedResult(rows[:k], k, interps)


def evaluate_hard(query: SubjectiveQuery, db, thresholds: dict | None = None, k=10,
                  default_threshold=0.5, variant="product", gate=None) -> RankedResult:
    """Boolean baseline: a quoted predicate holds iff its degree exceeds its threshold.

    Entities satisfying the whole clause are returned by ascending id.
    """
    thresholds = thresholds or {}
    soft = evaluate(query, db, k=len(db.entities) or 1, variant=variant, gate=gate)
    by_id = {r.entity_id: r for r in soft.rows}
    rows = []
    for ent in db.entities:
        row = by_id.get(ent.id)
        if query.where is None:
            rows.append(RankedRow(ent.id, 1.0, {}))
            continue
        if row is None:
            conds = _conditions_for(query, db, ent, soft.interpretations, variant)
        else:
            conds = row.conditions

        def leaf_truth(leaf, conds=conds):
            key = condition_key(leaf)
            v = conds[key]
            if isinstance(leaf, ObjectiveLeaf):
                return v
            return 1.0 if v > thresholds.get(key, default_threshold) else 0.0

        truth = evaluate_expr(query.where, leaf_truth, PRODUCT)
        if truth > 0.0:
            rows.append(RankedRow(ent.id, 1.0, conds))
    rows.sort(key=lambda r: r.entity_id)
    return RankedResult(rows[:k], k, soft.interpretations)


def _conditions_for(query, db, ent, interps, variant):
    """Per-condition degrees for an entity whose overall fuzzy degree was zero."""
    fv = VARIANTS[variant] if isinstance(variant, str) else variant
    scorer = _Scorer(db, interps)
    conds = {}
    for leaf in iter_leaves(query.where):
        if isinstance(leaf, ObjectiveLeaf):
            conds[condition_key(leaf)] = 1.0 if compare(ent.objective_attrs.get(leaf.attr),
                                                        leaf.op, leaf.literal) else 0.0
        elif isinstance(leaf, NLPredicate):
            conds[leaf.text] = scorer.nl(ent.id, leaf.text, fv, [])
    return conds
