"""Subjective databases: querying entities by the opinions written about them."""

from .config import Config
from .core import (And, Entity, ExtractionRecord, Interpretation, Marker, MarkerSummary, Method,
                   NLPredicate, Not, ObjectiveLeaf, Or, Review, SubjectiveAttribute,
                   SubjectiveLeaf)
from .database import CorpusInputs, SubjectiveDatabase
from .query import evaluate, evaluate_hard, parse

__all__ = ["And", "Config", "CorpusInputs", "Entity", "ExtractionRecord", "Interpretation",
           "Marker", "MarkerSummary", "Method", "NLPredicate", "Not", "ObjectiveLeaf", "Or",
           "Review", "SubjectiveAttribute", "SubjectiveDatabase", "SubjectiveLeaf", "evaluate",
           "evaluate_hard", "parse"]
