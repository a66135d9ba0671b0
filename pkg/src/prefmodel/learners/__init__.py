"""Four binary classifiers behind one train/predict contract.

Every trained model carries the fingerprint of the feature registry it was
trained on; :func:`predict` refuses inputs built with a different one.
Labels are -1 / +1 throughout, and every learner resolves ties to -1.
"""

from __future__ import annotations

import inspect
import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..errors import ContractError, DomainError
from ..featurize import FeatureMatrix, Instance, registry_fingerprint
from .adaboost import EnsembleModel, Stump, train_adaboost
from .naive_bayes import NBModel, train_naive_bayes
from .ripper import Condition, Rule, RuleSet, train_ripper
from .svm import SVMModel, kkt_residuals, train_svm_smo

FORMAT_VERSION = 1
KINDS = ("naive_bayes", "adaboost", "ripper", "svm")
ALIASES = {"nb": "naive_bayes", "jrip": "ripper", "smo": "svm"}
_MODEL_TYPES = {
    "naive_bayes": NBModel,
    "adaboost": EnsembleModel,
    "ripper": RuleSet,
    "svm": SVMModel,
}
_TRAINERS = {
    "naive_bayes": train_naive_bayes,
    "adaboost": train_adaboost,
    "ripper": train_ripper,
    "svm": train_svm_smo,
}


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise DomainError(f"unknown learner {kind!r}; choose from {KINDS}")
    return kind


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    model: Any
    registry_fingerprint: str

    def predict(self, X, fingerprint=None):
        return predict(self, X, fingerprint)

    def to_json(self) -> str:
        envelope = {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "registry_fingerprint": self.registry_fingerprint,
            "params": self.model.to_params(),
        }
        return json.dumps(envelope, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        data = json.loads(text)
        if data.get("format_version") != FORMAT_VERSION:
            raise ContractError(f"unsupported model format {data.get('format_version')!r}")
        kind = canonical_kind(data["kind"])
        return cls(kind, _MODEL_TYPES[kind].from_params(data["params"]), data["registry_fingerprint"])


def train(kind: str, X, y, feature_names: Sequence[str], **params) -> TrainedModel:
    """Train a learner of ``kind`` and stamp it with the registry fingerprint."""
    kind = canonical_kind(kind)
    if kind == "ripper":
        model = train_ripper(X, y, feature_names, **params)
    else:
        model = _TRAINERS[kind](X, y, **params)
    return TrainedModel(kind, model, registry_fingerprint(list(feature_names)))


def tunable_params(kind: str) -> tuple[str, ...]:
    """Keyword parameters the trainer of ``kind`` accepts."""
    sig = inspect.signature(_TRAINERS[canonical_kind(kind)])
    return tuple(name for name in list(sig.parameters)[2:] if name != "feature_names")


def _resolve(features, fingerprint):
    if isinstance(features, FeatureMatrix):
        return features.X, features.fingerprint, False
    if isinstance(features, Instance):
        return features.features[None, :], registry_fingerprint(features.feature_names), True
    X = np.asarray(features, dtype=float)
    if fingerprint is None:
        raise ContractError("a raw feature array needs the fingerprint or names of its registry")
    if not isinstance(fingerprint, str):
        fingerprint = registry_fingerprint(list(fingerprint))
    return np.atleast_2d(X), fingerprint, X.ndim == 1


def predict(model: TrainedModel, features, fingerprint=None):
    """Predict -1/+1 labels.

    ``features`` is a :class:`FeatureMatrix`, an :class:`Instance`, or a raw
    array together with ``fingerprint`` (a fingerprint string or the feature
    names).  A single vector yields a single int.
    """
    X, fp, single = _resolve(features, fingerprint)
    if fp != model.registry_fingerprint:
        raise ContractError(f"registry fingerprint {fp} does not match model's {model.registry_fingerprint}")
    out = model.model.predict(X)
    return int(out[0]) if single else out


__all__ = [
    "Condition",
    "EnsembleModel",
    "KINDS",
    "NBModel",
    "Rule",
    "RuleSet",
    "SVMModel",
    "Stump",
    "TrainedModel",
    "canonical_kind",
    "kkt_residuals",
    "predict",
    "train",
    "train_adaboost",
    "train_naive_bayes",
    "train_ripper",
    "train_svm_smo",
    "tunable_params",
]
