"""News corpus records and their on-disk store.

The store is append-only line-delimited JSON, one record per line with
fields {"id","date","url","headline","body"} (plus "topic" once assigned),
UTF-8, dates as YYYY-MM-DD. A sibling ``<store>.seen`` file lists crawled
URLs so an interrupted crawl resumes without refetching.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from datetime import date as Date
from pathlib import Path
from typing import Iterable

from .errors import DataError

logger = logging.getLogger(__name__)

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")

FIELD_ORDER = ("id", "date", "url", "headline", "body", "topic")


def parse_date(text: str) -> Date:
    """Strict YYYY-MM-DD parse."""
    if not _DATE_RE.match(text):
        raise ValueError(f"not a YYYY-MM-DD date: {text!r}")
    return Date.fromisoformat(text)


@dataclass(frozen=True)
class NewsItem:
    """One dated article."""

    id: str
    date: str
    url: str
    headline: str
    body: str
    topic: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("item id must be non-empty")
        if not self.url:
            raise DataError("item url must be non-empty")
        try:
            parse_date(self.date)
        except ValueError as exc:
            raise DataError(str(exc)) from None

    def with_topic(self, topic: str) -> "NewsItem":
        return replace(self, topic=topic)


@dataclass(frozen=True)
class CrawlPolicy:
    """Politeness contract for the archive crawler."""

    min_delay_ms: int = 1000
    max_concurrent: int = 1
    max_retries: int = 3
    user_agent: str = "sentindex-crawler/0.1"

    def __post_init__(self) -> None:
        if self.min_delay_ms < 500:
            raise DataError(f"min_delay_ms must be >= 500 (politeness floor), got {self.min_delay_ms}")
        if self.max_concurrent < 1:
            raise DataError("max_concurrent must be a positive integer")
        if self.max_retries < 0:
            raise DataError("max_retries must be non-negative")


def _item_from_record(record: dict, lineno: int) -> NewsItem:
    missing = {"id", "date", "url", "headline", "body"} - record.keys()
    if missing:
        raise DataError(f"missing fields {sorted(missing)}", line=lineno)
    try:
        return NewsItem(
            id=str(record["id"]),
            date=str(record["date"]),
            url=str(record["url"]),
            headline=str(record["headline"]),
            body=str(record["body"]),
            topic=record.get("topic"),
        )
    except DataError as exc:
        raise DataError(str(exc), line=lineno) from None


def load_corpus(path: str | Path) -> list[NewsItem]:
    """Load all valid items in file order, dropping repeat ids (first wins)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    items: list[NewsItem] = []
    seen_ids: set[str] = set()
    dropped = 0
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
            item = _item_from_record(record, lineno)
            if item.id in seen_ids:
                dropped += 1
                continue
            seen_ids.add(item.id)
            items.append(item)
    if dropped:
        logger.warning("dropped %d duplicate-id records from %s", dropped, path)
    return items


def _record_from_item(item: NewsItem) -> dict:
    record = {
        "id": item.id,
        "date": item.date,
        "url": item.url,
        "headline": item.headline,
        "body": item.body,
    }
    if item.topic is not None:
        record["topic"] = item.topic
    return record


def save_corpus(items: Iterable[NewsItem], path: str | Path) -> None:
    """Write items as line-delimited JSON; load_corpus round-trips the result."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(_record_from_item(item), ensure_ascii=False))
            fh.write("\n")


def append_item(item: NewsItem, path: str | Path) -> None:
    """Append one record; used by the crawler for incremental persistence."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(_record_from_item(item), ensure_ascii=False))
        fh.write("\n")


def seen_index_path(store_path: str | Path) -> Path:
    return Path(str(store_path) + ".seen")


def load_seen_urls(store_path: str | Path) -> set[str]:
    path = seen_index_path(store_path)
    if not path.exists():
        return set()
    return {line.strip() for line in path.read_text("utf-8").splitlines() if line.strip()}


def mark_seen(url: str, store_path: str | Path) -> None:
    path = seen_index_path(store_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(url + "\n")
