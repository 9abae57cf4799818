"""Batch headline sentiment scoring sidecar.

Reads line-delimited ``{"id","headline"}`` records, scores each headline
with a binary sentiment classifier, and writes line-delimited
``{"id","label","prob"}`` records where label is POSITIVE or NEGATIVE and
prob is the predicted-class probability in [0.5, 1].
"""

from .backends import BuiltinClassifier, TransformersClassifier, load_classifier
from .scorer import score_headlines

__version__ = "0.1.0"
