"""Topic extraction from article URLs and frequency-threshold cataloguing.

Topics live in a fixed path segment of each article URL (the archive encodes
them there), normalized to lowercase with underscores so they line up with
downstream feature names like ``politics_and_nation_lag1``. Segments below
the frequency threshold are neglected; an optional alias map folds URL
segments onto canonical topic names (e.g. "markets" onto "market").
"""

from __future__ import annotations

import csv
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping
from urllib.parse import urlparse

from .corpus import NewsItem
from .errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 200
DEFAULT_SEGMENT_INDEX = 1

_SEPARATORS = re.compile(r"[-\s]+")


def normalize_topic(segment: str) -> str:
    return _SEPARATORS.sub("_", segment.strip().lower())


def extract_topic(
    url: str,
    segment_index: int = DEFAULT_SEGMENT_INDEX,
    aliases: Mapping[str, str] | None = None,
) -> str | None:
    """Topic name from the configured URL path segment, or None if absent.

    A URL that is not absolute is an error, distinct from a well-formed URL
    that simply has no segment at that position.
    """
    parsed = urlparse(url)
    if not parsed.scheme or not parsed.netloc:
        raise DataError(f"not an absolute URL: {url!r}")
    segments = [part for part in parsed.path.split("/") if part]
    if segment_index >= len(segments):
        return None
    topic = normalize_topic(segments[segment_index])
    if not topic:
        return None
    if aliases:
        topic = aliases.get(topic, topic)
    return topic


@dataclass
class TopicCatalog:
    """Occurrence counts per topic plus the retained (>= threshold) subset."""

    entries: dict[str, int]
    threshold: int
    retained: list[str] = field(init=False)

    def __post_init__(self) -> None:
        if self.threshold < 1:
            raise DataError(f"threshold must be a positive integer, got {self.threshold}")
        ordered = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        self.retained = [name for name, count in ordered if count >= self.threshold]

    def is_retained(self, topic: str) -> bool:
        return topic in self.entries and self.entries[topic] >= self.threshold


def build_catalog(
    items: Iterable[NewsItem],
    threshold: int = DEFAULT_THRESHOLD,
    segment_index: int = DEFAULT_SEGMENT_INDEX,
    aliases: Mapping[str, str] | None = None,
) -> TopicCatalog:
    """Count extracted topics and retain those at or above the threshold.

    Only counts strictly below the threshold are neglected; a count equal to
    the threshold is kept.
    """
    items = list(items)
    if not items:
        raise DataError("cannot build a topic catalog from an empty corpus")
    counts: Counter[str] = Counter()
    for item in items:
        topic = extract_topic(item.url, segment_index, aliases)
        if topic is not None:
            counts[topic] += 1
    catalog = TopicCatalog(entries=dict(counts), threshold=threshold)
    if not catalog.retained:
        logger.warning(
            "no topic reached the threshold %d (max count %d)",
            threshold, max(counts.values(), default=0),
        )
    return catalog


@dataclass
class AssignResult:
    items: list[NewsItem]
    skipped_no_topic: int = 0
    skipped_below_threshold: int = 0


def assign_topics(
    items: Iterable[NewsItem],
    catalog: TopicCatalog,
    segment_index: int = DEFAULT_SEGMENT_INDEX,
    aliases: Mapping[str, str] | None = None,
) -> AssignResult:
    """Attach retained topics; items without one drop out of the analysis.

    The store itself is untouched: exclusion here only filters what flows
    downstream.
    """
    result = AssignResult(items=[])
    for item in items:
        topic = extract_topic(item.url, segment_index, aliases)
        if topic is None:
            result.skipped_no_topic += 1
            continue
        if not catalog.is_retained(topic):
            result.skipped_below_threshold += 1
            continue
        result.items.append(item.with_topic(topic))
    if result.skipped_no_topic or result.skipped_below_threshold:
        logger.info(
            "assign_topics: kept %d, skipped %d without topic, %d below threshold",
            len(result.items), result.skipped_no_topic, result.skipped_below_threshold,
        )
    return result


def write_catalog_csv(catalog: TopicCatalog, path: str | Path) -> None:
    """Export ``topic,count,retained`` rows, most frequent first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "count", "retained"])
        for name, count in sorted(catalog.entries.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow([name, count, str(count >= catalog.threshold).lower()])
