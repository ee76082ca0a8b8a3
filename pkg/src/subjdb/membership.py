"""Logistic-regression membership functions over marker-summary features."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import MarkerSummary, SubjectiveAttribute
from .errors import AttributeMismatch, DegenerateLabels
from .text import TextModel, cosine

FEATURE_LAYOUT_VERSION = 1


def feature_names(marker_names):
    return ([f"frac[{m}]" for m in marker_names]
            + ["log1p_total", "avg_sentiment", "cos_query_centroid", "cos_query_marker",
               "frac_interpreted_marker"])


@dataclass
class Features:
    values: np.ndarray
    query_oov: bool = False


def featurize(summary: MarkerSummary, phrase: str, marker: str, attribute: SubjectiveAttribute,
              text: TextModel) -> Features:
    """Fixed-order feature vector of length K + 5 for an attribute with K markers.

    Layout: per-marker count fractions, log(1 + total), average sentiment,
    cos(query, centroid), cos(query, interpreted marker), fraction of the
    interpreted marker. An evidence-free summary yields all zeros.
    """
    names = attribute.marker_names
    if summary.attribute != attribute.name:
        raise AttributeMismatch(f"summary of {summary.attribute!r} used with {attribute.name!r}")
    if marker not in summary.counts:
        raise KeyError(f"{marker!r} is not a marker of {attribute.name}")
    k = len(names)
    out = np.zeros(k + 5)
    qv = text.try_rep(phrase)
    if summary.total == 0:
        return Features(out, qv is None)
    out[:k] = summary.fractions(names)
    out[k] = np.log1p(summary.total)
    out[k + 1] = summary.avg_sentiment
    if qv is not None:
        out[k + 2] = cosine(qv, summary.centroid)
        out[k + 3] = cosine(qv, attribute.marker(marker).embedding)
    out[k + 4] = summary.counts[marker] / summary.total
    return Features(out, qv is None)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _softplus(z):
    return np.logaddexp(0.0, z)


@dataclass
class TrainingConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0


@dataclass
class MembershipModel:
    attribute: str
    weights: np.ndarray
    bias: float
    marker_names: list = field(default_factory=list)
    losses: list = field(default_factory=list)

    @property
    def final_loss(self):
        return self.losses[-1] if self.losses else None

    def predict(self, x):
        return _sigmoid(np.asarray(x, dtype=float) @ self.weights + self.bias)

    def to_dict(self):
        return {"attribute": self.attribute, "weights": [float(w) for w in self.weights],
                "bias": float(self.bias), "markers": list(self.marker_names),
                "final_loss": self.final_loss,
                "feature_layout_version": FEATURE_LAYOUT_VERSION}

    @classmethod
    def from_dict(cls, d):
        if d.get("feature_layout_version") != FEATURE_LAYOUT_VERSION:
            raise ValueError(f"unsupported feature layout {d.get('feature_layout_version')!r}")
        losses = [] if d.get("final_loss") is None else [d["final_loss"]]
        return cls(d["attribute"], np.asarray(d["weights"], dtype=float), float(d["bias"]),
                   list(d.get("markers", [])), losses)


def save_models(path, models: dict):
    payload = [models[a].to_dict() for a in sorted(models)]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8")


def load_models(path) -> dict:
    return {d["attribute"]: MembershipModel.from_dict(d)
            for d in json.loads(Path(path).read_text(encoding="utf-8"))}


def mf(model: MembershipModel, summary: MarkerSummary, phrase: str, marker: str,
       attribute: SubjectiveAttribute, text: TextModel) -> float:
    """Degree to which ``summary`` satisfies ``phrase`` interpreted as ``attribute.marker``."""
    if model.attribute != summary.attribute:
        raise AttributeMismatch(f"model for {model.attribute!r} applied to a "
                                f"{summary.attribute!r} summary")
    x = featurize(summary, phrase, marker, attribute, text).values
    return float(model.predict(x))


@dataclass(frozen=True)
class LabeledMembershipExample:
    summary: MarkerSummary
    phrase: str
    marker: str
    label: int


def logistic_loss(w, b, x, y, l2=0.0) -> float:
    """Mean logistic loss plus (l2 / 2)·|w|²; the bias is not regularised."""
    z = x @ w + b
    return float(np.mean(_softplus(z) - y * z) + 0.5 * l2 * (w @ w))


def logistic_grad(w, b, x, y, l2=0.0):
    p = _sigmoid(x @ w + b)
    r = p - y
    return x.T @ r / len(y) + l2 * w, float(np.mean(r))


def fit_logistic(x, y, hyper: TrainingConfig):
    """Full-batch gradient descent. Returns (weights, bias, per-epoch losses)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training data needs both labels")
    rng = np.random.default_rng(hyper.seed)
    w = rng.normal(0.0, 1e-3, size=x.shape[1])
    b = 0.0
    losses = [logistic_loss(w, b, x, y, hyper.l2)]
    for _ in range(hyper.epochs):
        gw, gb = logistic_grad(w, b, x, y, hyper.l2)
        w = w - hyper.learning_rate * gw
        b = b - hyper.learning_rate * gb
        losses.append(logistic_loss(w, b, x, y, hyper.l2))
    return w, b, losses


def featurize_examples(examples: Sequence[LabeledMembershipExample],
                       attribute: SubjectiveAttribute, text: TextModel):
    x = np.array([featurize(e.summary, e.phrase, e.marker, attribute, text).values
                  for e in examples]).reshape(len(examples), len(attribute.markers) + 5)
    y = np.array([float(e.label) for e in examples])
    return x, y


def train(examples: Sequence[LabeledMembershipExample], attribute: SubjectiveAttribute,
          text: TextModel, hyper: TrainingConfig | None = None) -> MembershipModel:
    hyper = hyper or TrainingConfig()
    for e in examples:
        if e.summary.attribute != attribute.name:
            raise AttributeMismatch(f"example summary for {e.summary.attribute!r} in "
                                    f"{attribute.name!r} training set")
    x, y = featurize_examples(examples, attribute, text)
    w, b, losses = fit_logistic(x, y, hyper)
    return MembershipModel(attribute.name, w, b, attribute.marker_names, losses)


def gradient_check(model: MembershipModel, x, y, epsilon=1e-5, l2=0.0) -> float:
    """Max relative error between the analytic loss gradient and central differences.

    ``x`` is one feature vector (or a batch), ``y`` its label(s). Relative
    error is |a - n| / max(|a| + |n|, 1e-6) per coordinate, bias included.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w, b = model.weights.astype(float), float(model.bias)
    gw, gb = logistic_grad(w, b, x, y, l2)
    analytic = np.append(gw, gb)
    theta = np.append(w, b)
    numeric = np.empty_like(theta)
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += epsilon
        dn[i] -= epsilon
        lu = logistic_loss(up[:-1], up[-1], x, y, l2)
        ld = logistic_loss(dn[:-1], dn[-1], x, y, l2)
        numeric[i] = (lu - ld) / (2 * epsilon)
    err = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float(err.max())
