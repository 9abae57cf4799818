"""Polite archive crawler.

One archive page is fetched per date in the requested range; article links
found on it are fetched, parsed and appended to the corpus store as they
arrive. Politeness is a hard contract: consecutive requests to one host are
spaced by at least ``policy.min_delay_ms`` no matter how many workers are in
flight, 429/5xx responses back off exponentially, and a URL is never fetched
twice thanks to the seen-URL index (which is also what makes an interrupted
crawl resumable).

The archive page layout is configuration, not code: ``archive_url_template``
may use ``{date}``, ``{year}``, ``{month}``, ``{day}`` and ``{ordinal}``
placeholders, and ``article_pattern`` filters which links on the page count
as articles.
"""

from __future__ import annotations

import hashlib
import logging
import re
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date as Date, timedelta
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable
from urllib.parse import urljoin, urlparse

from .corpus import CrawlPolicy, NewsItem, append_item, load_seen_urls, mark_seen
from .errors import DataError

logger = logging.getLogger(__name__)

RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class FetchResult:
    status: int
    body: str


Fetcher = Callable[[str, str, float], FetchResult]


def urllib_fetch(url: str, user_agent: str, timeout: float = 30.0) -> FetchResult:
    request = urllib.request.Request(url, headers={"User-Agent": user_agent})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            charset = response.headers.get_content_charset() or "utf-8"
            return FetchResult(response.status, response.read().decode(charset, "replace"))
    except urllib.error.HTTPError as exc:
        return FetchResult(exc.code, "")


class Clock:
    """Monotonic time source; swapped for a virtual clock in tests."""

    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class HostRateLimiter:
    """Serializes request start times so per-host gaps stay >= min_delay."""

    def __init__(self, min_delay_ms: int, clock: Clock):
        self._min_delay = min_delay_ms / 1000.0
        self._clock = clock
        self._lock = threading.Lock()
        self._next_allowed: dict[str, float] = {}

    def acquire(self, host: str) -> float:
        """Block until this thread may hit the host; returns the claimed time."""
        while True:
            with self._lock:
                now = self._clock.now()
                allowed_at = self._next_allowed.get(host, now)
                if now >= allowed_at:
                    self._next_allowed[host] = now + self._min_delay
                    return now
                wait = allowed_at - now
            self._clock.sleep(wait)


class _PageParser(HTMLParser):
    """Collects links, headline candidates and paragraph text.

    Paragraphs inside script/style/nav subtrees are dropped; when the page
    has an <article> container only its paragraphs are used.
    """

    _SKIP = frozenset({"script", "style", "nav", "noscript"})

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.links: list[str] = []
        self.title = ""
        self.h1 = ""
        self._article_paras: list[str] = []
        self._all_paras: list[str] = []
        self._skip_depth = 0
        self._article_depth = 0
        self._saw_article = False
        self._in_p = False
        self._in_h1 = False
        self._in_title = False
        self._buffer: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "article":
            self._article_depth += 1
            self._saw_article = True
        elif tag == "a":
            href = dict(attrs).get("href")
            if href:
                self.links.append(href)
        elif tag == "p":
            self._in_p = True
            self._buffer = []
        elif tag == "h1" and not self.h1:
            self._in_h1 = True
            self._buffer = []
        elif tag == "title":
            self._in_title = True
            self._buffer = []

    def handle_endtag(self, tag):
        if tag in self._SKIP:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag == "article":
            self._article_depth = max(0, self._article_depth - 1)
        elif tag == "p" and self._in_p:
            text = " ".join("".join(self._buffer).split())
            if text:
                self._all_paras.append(text)
                if self._article_depth > 0:
                    self._article_paras.append(text)
            self._in_p = False
        elif tag == "h1" and self._in_h1:
            self.h1 = " ".join("".join(self._buffer).split())
            self._in_h1 = False
        elif tag == "title" and self._in_title:
            self.title = " ".join("".join(self._buffer).split())
            self._in_title = False

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_p or self._in_h1 or self._in_title:
            self._buffer.append(data)

    @property
    def headline(self) -> str:
        return self.h1 or self.title

    @property
    def body(self) -> str:
        paras = self._article_paras if self._saw_article else self._all_paras
        return "\n".join(paras)


def extract_article(html: str) -> tuple[str, str]:
    """(headline, body) from an article page."""
    parser = _PageParser()
    parser.feed(html)
    return parser.headline, parser.body


def extract_links(html: str, base_url: str) -> list[str]:
    parser = _PageParser()
    parser.feed(html)
    seen = set()
    links = []
    for href in parser.links:
        absolute = urljoin(base_url, href.strip())
        if absolute.startswith(("http://", "https://")) and absolute not in seen:
            seen.add(absolute)
            links.append(absolute)
    return links


def format_archive_url(template: str, day: Date) -> str:
    return template.format(
        date=day.isoformat(),
        year=day.year,
        month=day.month,
        day=day.day,
        ordinal=day.toordinal(),
    )


def date_range(start: Date, end: Date) -> list[Date]:
    if start > end:
        raise DataError(f"empty date range: {start} > {end}")
    return [start + timedelta(days=offset) for offset in range((end - start).days + 1)]


def item_id_for_url(url: str) -> str:
    return hashlib.sha1(url.encode("utf-8")).hexdigest()[:16]


class Crawler:
    def __init__(
        self,
        policy: CrawlPolicy,
        store_path: str | Path,
        fetch: Fetcher = urllib_fetch,
        clock: Clock | None = None,
        timeout: float = 30.0,
    ):
        self.policy = policy
        self.store_path = Path(store_path)
        self.fetch = fetch
        self.clock = clock or Clock()
        self.timeout = timeout
        self.limiter = HostRateLimiter(policy.min_delay_ms, self.clock)
        self._store_lock = threading.Lock()
        self.request_log: list[tuple[str, float]] = []

    def _fetch_with_retry(self, url: str) -> FetchResult | None:
        host = urlparse(url).netloc
        delay = self.policy.min_delay_ms / 1000.0
        for attempt in range(self.policy.max_retries + 1):
            claimed = self.limiter.acquire(host)
            self.request_log.append((host, claimed))
            try:
                result = self.fetch(url, self.policy.user_agent, self.timeout)
            except OSError as exc:
                logger.warning("fetch error for %s (attempt %d): %s", url, attempt + 1, exc)
                continue
            if result.status in RETRY_STATUSES:
                logger.warning("HTTP %d for %s, backing off %.1fs", result.status, url, delay)
                self.clock.sleep(delay)
                delay *= 2
                continue
            if result.status != 200:
                logger.warning("HTTP %d for %s, skipping", result.status, url)
                return None
            return result
        logger.warning("giving up on %s after %d attempts", url, self.policy.max_retries + 1)
        return None

    def _crawl_article(self, url: str, day: Date) -> NewsItem | None:
        result = self._fetch_with_retry(url)
        if result is None:
            return None
        headline, body = extract_article(result.body)
        item = NewsItem(
            id=item_id_for_url(url),
            date=day.isoformat(),
            url=url,
            headline=headline,
            body=body,
        )
        with self._store_lock:
            append_item(item, self.store_path)
            mark_seen(url, self.store_path)
        return item

    def crawl(
        self,
        archive_url_template: str,
        start: Date,
        end: Date,
        article_pattern: str | None = None,
    ) -> list[NewsItem]:
        days = date_range(start, end)
        pattern = re.compile(article_pattern) if article_pattern else None
        seen = load_seen_urls(self.store_path)
        items: list[NewsItem] = []
        for day in days:
            archive_url = format_archive_url(archive_url_template, day)
            page = self._fetch_with_retry(archive_url)
            if page is None:
                continue
            archive_host = urlparse(archive_url).netloc
            links = []
            for link in extract_links(page.body, archive_url):
                if link == archive_url or link in seen:
                    continue
                if pattern is not None:
                    if not pattern.search(link):
                        continue
                elif urlparse(link).netloc != archive_host:
                    continue
                seen.add(link)
                links.append(link)
            if self.policy.max_concurrent > 1:
                with ThreadPoolExecutor(max_workers=self.policy.max_concurrent) as pool:
                    fetched = list(pool.map(lambda u: self._crawl_article(u, day), links))
            else:
                fetched = [self._crawl_article(url, day) for url in links]
            day_items = [item for item in fetched if item is not None]
            items.extend(day_items)
            logger.info("%s: %d articles (%d links)", day.isoformat(), len(day_items), len(links))
        return items


def crawl_archive(
    archive_url_template: str,
    start: Date,
    end: Date,
    policy: CrawlPolicy,
    store_path: str | Path,
    fetch: Fetcher = urllib_fetch,
    clock: Clock | None = None,
    article_pattern: str | None = None,
) -> list[NewsItem]:
    """Crawl one archive page per date plus linked articles; returns new items."""
    crawler = Crawler(policy, store_path, fetch=fetch, clock=clock)
    return crawler.crawl(archive_url_template, start, end, article_pattern=article_pattern)
