"""Classifier backends.

Every backend maps a batch of texts to (label, prob) pairs with label in
{POSITIVE, NEGATIVE} and prob the predicted-class probability, which for a
binary classifier always lands in [0.5, 1].

The bundled "builtin" model is a small pretrained linear classifier over
word counts; it keeps the sidecar runnable (and its tests deterministic)
with no downloads. Any other model string is treated as a HuggingFace
model id or local path and served through transformers, imported lazily.
"""

from __future__ import annotations

import json
import logging
import math
import re
from importlib import resources
from typing import Sequence

logger = logging.getLogger(__name__)

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"

BUILTIN = "builtin"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class ModelLoadError(RuntimeError):
    """The requested classifier could not be constructed."""


class BuiltinClassifier:
    """Logistic scorer over bag-of-words features with bundled weights."""

    def __init__(self, weights: dict | None = None):
        if weights is None:
            raw = resources.files("headline_scorer").joinpath("data/weights.json")
            weights = json.loads(raw.read_text("utf-8"))
        self.bias = float(weights["bias"])
        self.weights = {word: float(w) for word, w in weights["weights"].items()}

    def classify(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        results = []
        for text in texts:
            score = self.bias
            for token in _TOKEN_RE.findall(text.lower()):
                score += self.weights.get(token, 0.0)
            p_positive = 1.0 / (1.0 + math.exp(-score))
            if p_positive >= 0.5:
                results.append((POSITIVE, p_positive))
            else:
                results.append((NEGATIVE, 1.0 - p_positive))
        return results


class TransformersClassifier:
    """Binary text-classification pipeline served by transformers."""

    def __init__(self, model: str):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise ModelLoadError(f"transformers is not installed: {exc}") from exc
        try:
            self._pipe = pipeline("text-classification", model=model, device=-1)
        except Exception as exc:
            raise ModelLoadError(f"could not load model {model!r}: {exc}") from exc
        logger.info("loaded %s (model-default truncation applies)", model)

    @staticmethod
    def _normalize_label(label: str) -> str:
        upper = label.upper()
        if upper.startswith("POS") or upper == "LABEL_1":
            return POSITIVE
        if upper.startswith("NEG") or upper == "LABEL_0":
            return NEGATIVE
        raise ModelLoadError(
            f"model emitted non-binary sentiment label {label!r}; "
            "a POSITIVE/NEGATIVE classifier is required"
        )

    def classify(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        outputs = self._pipe(list(texts), truncation=True)
        results = []
        for out in outputs:
            label = self._normalize_label(out["label"])
            prob = float(out["score"])
            if not (0.5 <= prob <= 1.0):
                raise ModelLoadError(
                    f"predicted-class probability {prob} outside [0.5, 1]; "
                    "is the model binary?"
                )
            results.append((label, prob))
        return results


def load_classifier(model: str):
    if model == BUILTIN:
        return BuiltinClassifier()
    return TransformersClassifier(model)
