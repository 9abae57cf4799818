"""Per-item sentiment scoring.

Two engines produce one numeric score per news item:

* the lexicon engine, which sums word valences over the article body and
  squashes the sum S to S / sqrt(S^2 + alpha), keeping every score strictly
  inside (-1, +1);
* externally supplied classifier outputs (label + predicted-class
  probability), converted to signed base-10 log-odds.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError

logger = logging.getLogger(__name__)

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"

SOURCE_LEXICON = "LEXICON"
SOURCE_CLASSIFIER = "CLASSIFIER"

DEFAULT_ALPHA = 15.0
DEFAULT_EPSILON = 1e-6

VALENCE_MIN = -4.0
VALENCE_MAX = 4.0

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class ClassifierOutput:
    """One external classifier record: predicted label and its probability."""

    id: str
    label: str
    prob: float

    def __post_init__(self) -> None:
        if self.label not in (POSITIVE, NEGATIVE):
            raise DataError(f"label must be POSITIVE or NEGATIVE, got {self.label!r}")
        if not (0.5 <= self.prob <= 1.0):
            raise DataError(f"prob must lie in [0.5, 1], got {self.prob!r}")


@dataclass(frozen=True)
class SentimentScore:
    id: str
    value: float
    source: str


class Lexicon:
    """Word -> valence map, valences within [-4, +4], keys lowercase."""

    def __init__(self, entries: Mapping[str, float]):
        clean: dict[str, float] = {}
        for word, valence in entries.items():
            if word != word.lower():
                raise DataError(f"lexicon keys must be lowercase, got {word!r}")
            v = float(valence)
            if not (VALENCE_MIN <= v <= VALENCE_MAX):
                raise DataError(f"valence for {word!r} outside [-4, +4]: {v}")
            clean[word] = v
        self.entries = clean

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def valence(self, word: str) -> float:
        """Valence of a word, 0 for words not in the lexicon."""
        return self.entries.get(word, 0.0)


def load_lexicon(path: str | Path) -> Lexicon:
    """Read a tab-separated ``word<TAB>valence`` lexicon file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"lexicon file not found: {path}")
    entries: dict[str, float] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError("expected word<TAB>valence", line=lineno)
            word, valence = parts
            try:
                v = float(valence)
            except ValueError:
                raise DataError(f"non-numeric valence {valence!r}", line=lineno) from None
            if not (VALENCE_MIN <= v <= VALENCE_MAX):
                raise DataError(f"valence outside [-4, +4]: {v}", line=lineno)
            entries[word.lower()] = v
    return Lexicon(entries)


def bundled_lexicon() -> Lexicon:
    """Small finance/news lexicon shipped with the package."""
    data = resources.files("sentindex").joinpath("data/lexicon.tsv").read_text("utf-8")
    entries: dict[str, float] = {}
    for line in data.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        word, valence = line.split("\t")
        entries[word] = float(valence)
    return Lexicon(entries)


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens: maximal alphanumeric runs, empties dropped."""
    return _TOKEN_RE.findall(text.lower())


def score_text_lexicon(text: str, lexicon: Lexicon, alpha: float = DEFAULT_ALPHA) -> float:
    """Squashed valence sum S / sqrt(S^2 + alpha) over the text's tokens.

    Words absent from the lexicon contribute 0, so a text with no lexicon
    hits scores exactly 0. The result is strictly inside (-1, +1) and odd
    in S.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    total = 0.0
    for token in tokenize(text):
        total += lexicon.valence(token)
    return total / math.sqrt(total * total + alpha)


def prob_to_score(label: str, prob: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """Signed base-10 log-odds of a predicted-class probability.

    POSITIVE maps to +log10(p/(1-p)), NEGATIVE to the negation. The
    probability is capped at 1 - epsilon so certainty stays finite.
    """
    if label not in (POSITIVE, NEGATIVE):
        raise DataError(f"label must be POSITIVE or NEGATIVE, got {label!r}")
    if not (0.5 <= prob <= 1.0):
        raise DataError(f"prob must lie in [0.5, 1], got {prob!r}")
    p = min(prob, 1.0 - epsilon)
    magnitude = math.log10(p / (1.0 - p))
    return magnitude if label == POSITIVE else -magnitude


def score_output(out: ClassifierOutput, epsilon: float = DEFAULT_EPSILON) -> SentimentScore:
    return SentimentScore(
        id=out.id,
        value=prob_to_score(out.label, out.prob, epsilon),
        source=SOURCE_CLASSIFIER,
    )


def load_external_scores(path: str | Path) -> dict[str, ClassifierOutput]:
    """Read the sidecar scores file: one ``{"id","label","prob"}`` per line.

    Duplicate ids keep the last record (with a warning); malformed records
    and out-of-range probabilities are hard errors carrying the line number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"scores file not found: {path}")
    outputs: dict[str, ClassifierOutput] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(record, dict):
                raise DataError("record must be an object", line=lineno)
            missing = {"id", "label", "prob"} - record.keys()
            if missing:
                raise DataError(f"missing fields {sorted(missing)}", line=lineno)
            try:
                out = ClassifierOutput(
                    id=str(record["id"]),
                    label=record["label"],
                    prob=float(record["prob"]),
                )
            except (TypeError, ValueError):
                raise DataError(f"bad prob value {record['prob']!r}", line=lineno) from None
            except DataError as exc:
                raise DataError(str(exc), line=lineno) from None
            if out.id in outputs:
                logger.warning("duplicate id %s at line %d, keeping last", out.id, lineno)
            outputs[out.id] = out
    return outputs


def score_items(
    items: Iterable,
    lexicon: Lexicon,
    alpha: float = DEFAULT_ALPHA,
) -> list[SentimentScore]:
    """Score item bodies with the lexicon engine, one record per item."""
    return [
        SentimentScore(id=item.id, value=score_text_lexicon(item.body, lexicon, alpha), source=SOURCE_LEXICON)
        for item in items
    ]


def score_items_external(
    items: Iterable,
    outputs: Mapping[str, ClassifierOutput],
    epsilon: float = DEFAULT_EPSILON,
) -> list[SentimentScore]:
    """Attach classifier scores to items; items without a record are skipped."""
    scores = []
    skipped = 0
    for item in items:
        out = outputs.get(item.id)
        if out is None:
            skipped += 1
            continue
        scores.append(score_output(out, epsilon))
    if skipped:
        logger.warning("%d items had no external score and were skipped", skipped)
    return scores


def save_scores(scores: Iterable[SentimentScore], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for score in scores:
            fh.write(json.dumps(
                {"id": score.id, "value": score.value, "source": score.source},
                ensure_ascii=False,
            ))
            fh.write("\n")


def load_scores(path: str | Path) -> list[SentimentScore]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"score file not found: {path}")
    scores = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if record.get("source") not in (SOURCE_LEXICON, SOURCE_CLASSIFIER):
                raise DataError(f"bad source {record.get('source')!r}", line=lineno)
            scores.append(SentimentScore(
                id=str(record["id"]), value=float(record["value"]), source=record["source"],
            ))
    return scores
