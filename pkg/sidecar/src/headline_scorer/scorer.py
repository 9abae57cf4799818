"""Batch scoring of headline files."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .backends import BUILTIN, load_classifier

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 64


class InputError(ValueError):
    """Malformed headline input."""


def read_headlines(path: str | Path) -> list[tuple[str, str]]:
    """(id, headline) pairs in file order; ids must be unique."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict) or "id" not in record or "headline" not in record:
                raise InputError(f'line {lineno}: expected {{"id","headline"}}')
            record_id = str(record["id"])
            if record_id in seen:
                raise InputError(f"line {lineno}: duplicate id {record_id!r}")
            seen.add(record_id)
            headline = str(record["headline"])
            if not headline.strip():
                logger.warning("line %d: empty headline for id %s, scoring as-is",
                               lineno, record_id)
            rows.append((record_id, headline))
    return rows


def score_headlines(
    input_path: str | Path,
    output_path: str | Path,
    batch_size: int = DEFAULT_BATCH_SIZE,
    model: str = BUILTIN,
) -> int:
    """Score every input record, writing output in input order.

    Returns the number of records written. Output lines are
    ``{"id": ..., "label": "POSITIVE"|"NEGATIVE", "prob": <float in [0.5, 1]>}``.
    """
    if batch_size < 1:
        raise InputError(f"batch size must be positive, got {batch_size}")
    rows = read_headlines(input_path)
    classifier = load_classifier(model)
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    written = 0
    with output_path.open("w", encoding="utf-8") as fh:
        for start in range(0, len(rows), batch_size):
            batch = rows[start : start + batch_size]
            results = classifier.classify([headline for _, headline in batch])
            for (record_id, _), (label, prob) in zip(batch, results):
                fh.write(json.dumps({"id": record_id, "label": label, "prob": prob}))
                fh.write("\n")
                written += 1
    logger.info("scored %d headlines with %s -> %s", written, model, output_path)
    return written
