"""Run configuration: every tunable constant in one TOML-serialisable record."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

import toml

from .errors import DataError


@dataclass
class Config:
    seed: int = 0
    relation: str = "Hotels"
    # interpretation
    w2v_threshold: float = 0.5
    combined_threshold: float = 0.8
    cooc_k: int = 50
    cooc_n: int = 2
    conj_threshold: float = 0.5
    score_threshold: float = 3.0
    fast_lookup: bool = True
    # schema construction
    marker_k: int = 10
    classify_threshold: float = 0.2
    seed_expansion: int = 3
    # membership training
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    # evaluation
    variant: str = "product"
    k: int = 10
    zero_evidence_prior: float = 0.3
    offset_policy: str = "median"   # "median" or "fixed"
    offset_c: float = 0.0
    hard_threshold: float = 0.5
    date_from: str = ""
    date_to: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self):
        unit = ["w2v_threshold", "combined_threshold", "conj_threshold", "zero_evidence_prior",
                "hard_threshold"]
        for name in unit:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not -1.0 <= self.classify_threshold <= 1.0:
            raise ValueError("classify_threshold must lie in [-1, 1]")
        for name in ("cooc_k", "cooc_n", "k", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.marker_k < 2:
            raise ValueError("marker_k must be >= 2")
        if self.seed_expansion < 0 or self.score_threshold < 0 or self.l2 < 0:
            raise ValueError("seed_expansion, score_threshold and l2 must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.variant not in ("product", "minmax"):
            raise ValueError(f"unknown fuzzy variant {self.variant!r}")
        if self.offset_policy not in ("median", "fixed"):
            raise ValueError(f"unknown offset policy {self.offset_policy!r}")

    @property
    def date_range(self):
        if not self.date_from and not self.date_to:
            return None
        return (self.date_from or None, self.date_to or None)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        values = {}
        for f in fields(cls):
            if f.name in d:
                default = getattr(cls, f.name)
                v = d[f.name]
                values[f.name] = float(v) if isinstance(default, float) and not isinstance(v, bool) else v
        return cls(**values)

    def replace(self, **overrides):
        """Copy with non-None overrides applied (command-line flags win)."""
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return Config.from_dict(d)

    def dumps(self) -> str:
        return toml.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str):
        return cls.from_dict(toml.loads(text))

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        try:
            return cls.loads(Path(path).read_text(encoding="utf-8"))
        except toml.TomlDecodeError as exc:
            raise DataError(f"invalid config: {exc}", path) from exc
