import threading
import time
from datetime import date

import pytest

from sentindex.corpus import CrawlPolicy, load_corpus
from sentindex.crawl import (
    Clock,
    Crawler,
    FetchResult,
    crawl_archive,
    date_range,
    extract_article,
    extract_links,
    format_archive_url,
)
from sentindex.errors import DataError


class VirtualClock(Clock):
    """Deterministic clock: time only advances when someone sleeps."""

    def __init__(self):
        self._now = 0.0
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._now

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self._now += max(0.0, seconds)


ARCHIVE_HTML = """
<html><body>
  <a href="/news/market/story-one/articleshow/1.cms">one</a>
  <a href="/news/politics/story-two/articleshow/2.cms">two</a>
  <a href="https://elsewhere.example.net/offsite">offsite</a>
</body></html>
"""

ARTICLE_HTML = """
<html><head><title>Title tag</title><script>var x = "script noise";</script></head>
<body>
  <nav><p>nav junk</p></nav>
  <h1>Real headline</h1>
  <article>
    <p>First paragraph.</p>
    <style>.x { color: red }</style>
    <p>Second paragraph.</p>
  </article>
  <p>outside the container</p>
</body></html>
"""


class FakeFetcher:
    def __init__(self, pages=None, failures=None):
        self.pages = pages or {}
        self.failures = failures or {}
        self.calls = []

    def __call__(self, url, user_agent, timeout):
        self.calls.append(url)
        if url in self.failures:
            statuses = self.failures[url]
            if statuses:
                status = statuses.pop(0)
                if status == "raise":
                    raise OSError("connection reset")
                return FetchResult(status, "")
        return FetchResult(200, self.pages.get(url, ARTICLE_HTML))


def policy(**over):
    defaults = dict(min_delay_ms=500, max_concurrent=1, max_retries=2)
    defaults.update(over)
    return CrawlPolicy(**defaults)


TEMPLATE = "https://arch.example.com/archive/{date}.cms"


def archive_pages(days):
    return {format_archive_url(TEMPLATE, day): ARCHIVE_HTML for day in days}


class TestHtmlExtraction:
    def test_article_scoped_paragraphs(self):
        headline, body = extract_article(ARTICLE_HTML)
        assert headline == "Real headline"
        assert body == "First paragraph.\nSecond paragraph."

    def test_title_fallback(self):
        headline, _ = extract_article("<html><head><title>Only title</title></head></html>")
        assert headline == "Only title"

    def test_no_article_container_uses_all_paragraphs(self):
        html = "<body><nav><p>skip</p></nav><p>a</p><script><p>x</p></script><p>b</p></body>"
        _, body = extract_article(html)
        assert body == "a\nb"

    def test_extract_links_absolutizes_and_dedups(self):
        links = extract_links(ARCHIVE_HTML + ARCHIVE_HTML, "https://arch.example.com/x")
        assert links == [
            "https://arch.example.com/news/market/story-one/articleshow/1.cms",
            "https://arch.example.com/news/politics/story-two/articleshow/2.cms",
            "https://elsewhere.example.net/offsite",
        ]


class TestArchiveUrl:
    def test_placeholders(self):
        day = date(2023, 7, 4)
        url = format_archive_url(
            "https://h/{year}/{month}/{day}/{date}/{ordinal}.cms", day
        )
        assert url == f"https://h/2023/7/4/2023-07-04/{day.toordinal()}.cms"

    def test_date_range_inclusive(self):
        days = date_range(date(2023, 7, 1), date(2023, 7, 3))
        assert [d.isoformat() for d in days] == ["2023-07-01", "2023-07-02", "2023-07-03"]

    def test_empty_range_is_an_error(self):
        with pytest.raises(DataError):
            date_range(date(2023, 7, 2), date(2023, 7, 1))


class TestCrawler:
    def test_empty_range_issues_zero_requests(self, tmp_path):
        fetcher = FakeFetcher()
        with pytest.raises(DataError):
            crawl_archive(TEMPLATE, date(2023, 7, 2), date(2023, 7, 1),
                          policy(), tmp_path / "c.jsonl", fetch=fetcher)
        assert fetcher.calls == []

    def test_crawl_persists_items(self, tmp_path):
        day = date(2023, 7, 1)
        fetcher = FakeFetcher(pages=archive_pages([day]))
        store = tmp_path / "c.jsonl"
        items = crawl_archive(TEMPLATE, day, day, policy(), store,
                              fetch=fetcher, clock=VirtualClock())
        assert len(items) == 2
        on_disk = load_corpus(store)
        assert [item.url for item in on_disk] == [item.url for item in items]
        assert all(item.date == "2023-07-01" for item in on_disk)
        assert all(item.headline == "Real headline" for item in on_disk)

    def test_per_host_gaps_respect_min_delay(self, tmp_path):
        days = [date(2023, 7, 1), date(2023, 7, 2)]
        fetcher = FakeFetcher(pages=archive_pages(days))
        crawler = Crawler(policy(min_delay_ms=700), tmp_path / "c.jsonl",
                          fetch=fetcher, clock=VirtualClock())
        crawler.crawl(TEMPLATE, days[0], days[-1])
        by_host: dict[str, list[float]] = {}
        for host, stamp in crawler.request_log:
            by_host.setdefault(host, []).append(stamp)
        assert sum(len(v) for v in by_host.values()) >= 4
        for stamps in by_host.values():
            stamps.sort()
            for a, b in zip(stamps, stamps[1:]):
                assert b - a >= 0.7 - 1e-9

    def test_three_requests_take_two_delays_realtime(self, tmp_path):
        # archive page + 2 articles = 3 requests at min_delay 1000 ms
        day = date(2023, 7, 1)
        fetcher = FakeFetcher(pages=archive_pages([day]))
        started = time.monotonic()
        crawl_archive(TEMPLATE, day, day, policy(min_delay_ms=1000),
                      tmp_path / "c.jsonl", fetch=fetcher)
        elapsed = time.monotonic() - started
        assert len(fetcher.calls) == 3
        assert elapsed >= 2.0

    def test_url_seen_on_two_archive_pages_fetched_once(self, tmp_path):
        days = [date(2023, 7, 1), date(2023, 7, 2)]
        fetcher = FakeFetcher(pages=archive_pages(days))
        store = tmp_path / "c.jsonl"
        items = crawl_archive(TEMPLATE, days[0], days[-1], policy(), store,
                              fetch=fetcher, clock=VirtualClock())
        assert len(items) == 2  # both articles linked from both pages, fetched once
        article_calls = [u for u in fetcher.calls if "articleshow" in u]
        assert len(article_calls) == len(set(article_calls)) == 2

    def test_resume_skips_already_crawled(self, tmp_path):
        day = date(2023, 7, 1)
        store = tmp_path / "c.jsonl"
        first = FakeFetcher(pages=archive_pages([day]))
        crawl_archive(TEMPLATE, day, day, policy(), store,
                      fetch=first, clock=VirtualClock())
        second = FakeFetcher(pages=archive_pages([day]))
        new_items = crawl_archive(TEMPLATE, day, day, policy(), store,
                                  fetch=second, clock=VirtualClock())
        assert new_items == []
        assert [u for u in second.calls if "articleshow" in u] == []
        assert len(load_corpus(store)) == 2

    def test_server_errors_back_off_then_succeed(self, tmp_path):
        day = date(2023, 7, 1)
        url = "https://arch.example.com/news/market/story-one/articleshow/1.cms"
        fetcher = FakeFetcher(pages=archive_pages([day]), failures={url: [503, 429]})
        clock = VirtualClock()
        items = crawl_archive(TEMPLATE, day, day, policy(max_retries=3),
                              tmp_path / "c.jsonl", fetch=fetcher, clock=clock)
        assert len(items) == 2
        assert fetcher.calls.count(url) == 3

    def test_failure_after_retries_skips_and_continues(self, tmp_path, caplog):
        day = date(2023, 7, 1)
        url = "https://arch.example.com/news/market/story-one/articleshow/1.cms"
        fetcher = FakeFetcher(
            pages=archive_pages([day]),
            failures={url: ["raise", "raise", "raise"]},
        )
        with caplog.at_level("WARNING"):
            items = crawl_archive(TEMPLATE, day, day, policy(max_retries=2),
                                  tmp_path / "c.jsonl", fetch=fetcher, clock=VirtualClock())
        assert len(items) == 1  # the other article still made it
        assert "giving up" in caplog.text

    def test_dead_archive_page_skips_that_date(self, tmp_path):
        days = [date(2023, 7, 1), date(2023, 7, 2)]
        pages = archive_pages(days)
        dead = format_archive_url(TEMPLATE, days[0])
        fetcher = FakeFetcher(pages=pages, failures={dead: [404]})
        items = crawl_archive(TEMPLATE, days[0], days[-1], policy(),
                              tmp_path / "c.jsonl", fetch=fetcher, clock=VirtualClock())
        assert len(items) == 2
        assert all(item.date == "2023-07-02" for item in items)

    def test_article_pattern_filters_links(self, tmp_path):
        day = date(2023, 7, 1)
        fetcher = FakeFetcher(pages=archive_pages([day]))
        items = crawl_archive(TEMPLATE, day, day, policy(), tmp_path / "c.jsonl",
                              fetch=fetcher, clock=VirtualClock(),
                              article_pattern=r"/news/market/")
        assert len(items) == 1
        assert "market" in items[0].url

    def test_concurrent_crawl_keeps_delay_contract(self, tmp_path):
        days = [date(2023, 7, 1), date(2023, 7, 2)]
        fetcher = FakeFetcher(pages=archive_pages(days))
        crawler = Crawler(policy(max_concurrent=3, min_delay_ms=500),
                          tmp_path / "c.jsonl", fetch=fetcher, clock=VirtualClock())
        items = crawler.crawl(TEMPLATE, days[0], days[-1])
        assert len(items) == 2
        stamps = sorted(stamp for _, stamp in crawler.request_log)
        for a, b in zip(stamps, stamps[1:]):
            assert b - a >= 0.5 - 1e-9
