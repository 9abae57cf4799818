#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures (deterministic, seed below).

Produces a ~six-month synthetic corpus whose market-topic sentiment leaks
into the next trading day's close, at index-like price levels, plus a
classifier-score sidecar file and a 20-headline scoring input.
"""

from __future__ import annotations

import json
import math
from datetime import date, timedelta
from pathlib import Path

import numpy as np

OUT = Path(__file__).parent.parent / "tests" / "fixtures"
SEED = 20240222

POSITIVE_WORDS = ["rally", "surge", "profit", "growth", "optimism", "record", "boost", "gain"]
NEGATIVE_WORDS = ["slump", "crisis", "loss", "fear", "crash", "decline", "warn", "panic"]
NEUTRAL_WORDS = ["the", "index", "shares", "trading", "session", "report", "quarter", "announced"]


def body_for(rng: np.random.Generator, polarity: float) -> tuple[str, float]:
    """Article body with net sentiment leaning toward ``polarity``."""
    words = []
    lean = 0
    for _ in range(rng.integers(12, 24)):
        roll = rng.random()
        if roll < 0.35 + 0.3 * polarity:
            words.append(str(rng.choice(POSITIVE_WORDS)))
            lean += 1
        elif roll < 0.7:
            words.append(str(rng.choice(NEGATIVE_WORDS)))
            lean -= 1
        else:
            words.append(str(rng.choice(NEUTRAL_WORDS)))
    return " ".join(words), float(lean)


def main() -> None:
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)

    start = date(2023, 7, 1)
    end = date(2023, 12, 31)
    days = [start + timedelta(days=i) for i in range((end - start).days + 1)]

    segments = ["market", "politics-and-nation", "international", "sports"]
    items = []
    scores = []
    market_polarity: dict[str, float] = {}
    counter = 0
    for day in days:
        iso = day.isoformat()
        daily_polarity = float(rng.uniform(-1, 1))
        market_polarity[iso] = daily_polarity
        plan = ["market", "politics-and-nation"]
        if day.toordinal() % 2 == 0:
            plan.append("international")
        if rng.random() < 0.02:
            plan.append("sports")
        for segment in plan:
            polarity = daily_polarity if segment == "market" else float(rng.uniform(-1, 1))
            body, lean = body_for(rng, (polarity + 1) / 2)
            item_id = f"fx{counter:05d}"
            counter += 1
            items.append({
                "id": item_id,
                "date": iso,
                "url": f"https://news.example.com/news/{segment}/story-{item_id}/articleshow/{counter}.cms",
                "headline": f"{segment.replace('-', ' ')} update {item_id}",
                "body": body,
            })
            label = "POSITIVE" if lean >= 0 else "NEGATIVE"
            prob = 0.5 + 0.45 * abs(math.tanh(lean / 4.0))
            scores.append({"id": item_id, "label": label, "prob": round(prob, 6)})

    with (OUT / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        for record in items:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    with (OUT / "scores.jsonl").open("w", encoding="utf-8") as fh:
        for record in scores:
            fh.write(json.dumps(record) + "\n")

    # OHLC on weekdays only; market sentiment of the prior calendar day moves the close
    ohlc_lines = ["Date,Open,High,Low,Close"]
    close = 19_500.0
    for i, day in enumerate(days):
        if day.weekday() >= 5:
            continue
        previous = (day - timedelta(days=1)).isoformat()
        drift = 35.0 * market_polarity.get(previous, 0.0)
        wave = 35.0 * math.sin(i / 9.0)
        noise = float(rng.normal(0, 8.0))
        new_close = close + drift + wave * 0.2 + noise
        opening = close + float(rng.normal(0, 5.0))
        high = max(opening, new_close) + abs(float(rng.normal(0, 6.0)))
        low = min(opening, new_close) - abs(float(rng.normal(0, 6.0)))
        ohlc_lines.append(
            f"{day.isoformat()},{opening:.2f},{high:.2f},{low:.2f},{new_close:.2f}"
        )
        close = new_close
    (OUT / "ohlc.csv").write_text("\n".join(ohlc_lines) + "\n", "utf-8")

    headline_rows = [
        {"id": item["id"], "headline": item["headline"] + " " + item["body"][:40]}
        for item in items[:20]
    ]
    with (OUT / "headlines.jsonl").open("w", encoding="utf-8") as fh:
        for record in headline_rows:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    config = {
        "corpus": "corpus.jsonl",
        "ohlc": "ohlc.csv",
        "out_dir": "out",
        "topic_threshold": 5,
        "lags": [3, 5],
        "grid": {
            "lambdas": [0.0001, 0.01, 0.1],
            "mixes": [0.5],
            "val_fraction": 0.2,
            "tol": 1e-5,
            "max_iter": 5000,
        },
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2) + "\n", "utf-8")
    print(f"wrote fixtures for {len(items)} items, {len(ohlc_lines) - 1} trading days")


if __name__ == "__main__":
    main()
