import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from sentindex.corpus import (
    CrawlPolicy,
    NewsItem,
    load_corpus,
    load_seen_urls,
    mark_seen,
    parse_date,
    save_corpus,
)
from sentindex.errors import DataError


def record(i, **over):
    base = {
        "id": f"r{i}",
        "date": "2023-07-01",
        "url": f"https://host/news/market/s{i}/a{i}.cms",
        "headline": f"h{i}",
        "body": f"b{i}",
    }
    base.update(over)
    return base


class TestLoadCorpus:
    def test_two_lines_in_order(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(record(1)) + "\n" + json.dumps(record(2)) + "\n", "utf-8")
        items = load_corpus(path)
        assert [item.id for item in items] == ["r1", "r2"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("", "utf-8")
        assert load_corpus(path) == []

    def test_duplicate_id_keeps_first(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        first = record(1, headline="first")
        second = record(1, headline="second")
        path.write_text(json.dumps(first) + "\n" + json.dumps(second) + "\n", "utf-8")
        items = load_corpus(path)
        assert len(items) == 1
        assert items[0].headline == "first"

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_corpus(tmp_path / "absent.jsonl")

    def test_malformed_record_names_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(record(1)) + "\n{broken\n", "utf-8")
        with pytest.raises(DataError, match="line 2"):
            load_corpus(path)

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        bad = record(1)
        del bad["date"]
        path.write_text(json.dumps(bad) + "\n", "utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_corpus(path)

    def test_bad_date_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(record(1, date="01-07-2023")) + "\n", "utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_corpus(path)

    def test_ids_form_a_set(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        rows = [record(1), record(2), record(1), record(3), record(2)]
        path.write_text("".join(json.dumps(r) + "\n" for r in rows), "utf-8")
        items = load_corpus(path)
        ids = [item.id for item in items]
        assert len(ids) == len(set(ids)) == 3


text_field = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80
)


class TestRoundTrip:
    @settings(max_examples=20, deadline=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(st.lists(text_field, min_size=0, max_size=5))
    def test_save_load_identity(self, tmp_path_factory, bodies):
        items = [
            NewsItem(
                id=f"id{i}",
                date="2024-01-15",
                url=f"https://host/a/{i}",
                headline=f"héadline {i} ≠",
                body=body,
            )
            for i, body in enumerate(bodies)
        ]
        path = tmp_path_factory.mktemp("roundtrip") / "c.jsonl"
        save_corpus(items, path)
        assert load_corpus(path) == items

    def test_topic_survives_roundtrip(self, tmp_path):
        item = NewsItem(id="a", date="2024-01-15", url="https://h/x", headline="h",
                        body="b", topic="market")
        path = tmp_path / "c.jsonl"
        save_corpus([item], path)
        assert load_corpus(path) == [item]


class TestNewsItemValidation:
    def test_empty_id(self):
        with pytest.raises(DataError):
            NewsItem(id="", date="2024-01-01", url="https://h/", headline="", body="")

    def test_empty_url(self):
        with pytest.raises(DataError):
            NewsItem(id="a", date="2024-01-01", url="", headline="", body="")

    def test_nonsense_date(self):
        with pytest.raises(DataError):
            NewsItem(id="a", date="2024-13-40", url="https://h/", headline="", body="")

    def test_parse_date_strict_format(self):
        with pytest.raises(ValueError):
            parse_date("2024-1-1")


class TestCrawlPolicy:
    def test_politeness_floor(self):
        with pytest.raises(DataError):
            CrawlPolicy(min_delay_ms=200)

    def test_negative_retries(self):
        with pytest.raises(DataError):
            CrawlPolicy(max_retries=-1)

    def test_defaults_valid(self):
        policy = CrawlPolicy()
        assert policy.max_concurrent == 1


class TestSeenIndex:
    def test_mark_and_load(self, tmp_path):
        store = tmp_path / "corpus.jsonl"
        assert load_seen_urls(store) == set()
        mark_seen("https://h/a", store)
        mark_seen("https://h/b", store)
        assert load_seen_urls(store) == {"https://h/a", "https://h/b"}
