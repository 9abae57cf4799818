"""Command-line interface.

Per-stage subcommands plus ``run`` for the whole pipeline. Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import crawl as crawl_mod
from . import models as models_mod
from . import panel as panel_mod
from . import report as report_mod
from . import sentiment as sentiment_mod
from . import topics as topics_mod
from .errors import DataError, NumericError, PipelineError, UsageError
from .pipeline import PipelineConfig, load_config, run_pipeline

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise UsageError(message)


def _add_run_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", help="corpus file (line-delimited records)")
    parser.add_argument("--scores", help="external classifier scores file")
    parser.add_argument("--lexicon", help="lexicon file (word<TAB>valence)")
    parser.add_argument("--ohlc", help="OHLC CSV (Date,Open,High,Low,Close)")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--lags", help="comma-separated lag depths, e.g. 3,5")
    parser.add_argument("--threshold", type=int, dest="topic_threshold",
                        help="topic frequency threshold")
    parser.add_argument("--segment-index", type=int, dest="topic_segment_index",
                        help="URL path segment carrying the topic")
    parser.add_argument("--aliases", help="JSON object folding URL segments onto topics")
    parser.add_argument("--aggregate", choices=panel_mod.AGGREGATES)
    parser.add_argument("--alpha", type=float, help="lexicon smoothing parameter")
    parser.add_argument("--epsilon", type=float, help="log-odds certainty cap")
    parser.add_argument("--baseline", action=argparse.BooleanOptionalAction, default=None,
                        help="include OHLC-only comparison columns")
    parser.add_argument("--train-from", help="training range start, YYYY-MM-DD")
    parser.add_argument("--train-to", help="training range end, YYYY-MM-DD")
    parser.add_argument("--test-from", help="test range start, YYYY-MM-DD")
    parser.add_argument("--test-to", help="test range end, YYYY-MM-DD")
    parser.add_argument("--exclude", action="append",
                        help="excluded range as FROM:TO, repeatable")
    parser.add_argument("--models", help="comma-separated model kinds to fit")
    parser.add_argument("--formats", help="comma-separated report formats")
    parser.add_argument("--grid", help="hyperparameter grid JSON file")
    parser.add_argument("--trading-days-only", action="store_true", default=None)
    parser.add_argument("--seed", type=int, help="reserved for fixture generation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sentindex",
                     description="News-topic sentiment pipeline for index forecasting")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crawl", help="crawl an archive into a corpus store")
    p.add_argument("--template", required=True,
                   help="archive URL template with {date}/{year}/{month}/{day}/{ordinal}")
    p.add_argument("--from", dest="date_from", required=True, help="first date, YYYY-MM-DD")
    p.add_argument("--to", dest="date_to", required=True, help="last date, YYYY-MM-DD")
    p.add_argument("--min-delay-ms", type=int, default=1000)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--max-concurrent", type=int, default=1)
    p.add_argument("--user-agent", default=corpus_mod.CrawlPolicy.user_agent)
    p.add_argument("--article-pattern", help="regex an article link must match")
    p.add_argument("--out", required=True, help="corpus store path")

    p = sub.add_parser("topics", help="build the topic catalog and tag items")
    p.add_argument("--corpus", required=True)
    p.add_argument("--threshold", type=int, default=topics_mod.DEFAULT_THRESHOLD)
    p.add_argument("--segment-index", type=int, default=topics_mod.DEFAULT_SEGMENT_INDEX)
    p.add_argument("--aliases", help="JSON object folding URL segments onto topics")
    p.add_argument("--catalog-out", required=True)
    p.add_argument("--tagged-out", required=True)

    p = sub.add_parser("score", help="score items with a sentiment engine")
    p.add_argument("--corpus", required=True, help="tagged corpus file")
    p.add_argument("--engine", choices=["lexicon", "external"], default="lexicon")
    p.add_argument("--lexicon", help="lexicon file; bundled lexicon when omitted")
    p.add_argument("--scores", help="external scores file (engine=external)")
    p.add_argument("--alpha", type=float, default=sentiment_mod.DEFAULT_ALPHA)
    p.add_argument("--epsilon", type=float, default=sentiment_mod.DEFAULT_EPSILON)
    p.add_argument("--out", required=True)

    p = sub.add_parser("panel", help="aggregate scores and build design matrices")
    p.add_argument("--corpus", required=True, help="tagged corpus file")
    p.add_argument("--scores", required=True, help="per-item score file")
    p.add_argument("--ohlc", required=True)
    p.add_argument("--threshold", type=int, default=topics_mod.DEFAULT_THRESHOLD)
    p.add_argument("--segment-index", type=int, default=topics_mod.DEFAULT_SEGMENT_INDEX)
    p.add_argument("--aliases", help="JSON object folding URL segments onto topics")
    p.add_argument("--lags", default="3,5", help="comma-separated lag depths")
    p.add_argument("--aggregate", choices=panel_mod.AGGREGATES, default="mean")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("fit", help="fit one model kind on a design matrix")
    p.add_argument("--design", help="design matrix CSV")
    p.add_argument("--artifacts", help="panel output directory (used with --lags)")
    p.add_argument("--lags", type=int, help="lag depth, picks design_lag<L>.csv")
    p.add_argument("--model", required=True,
                   choices=[k.lower() for k in models_mod.KINDS])
    p.add_argument("--grid", help="hyperparameter grid JSON file")
    p.add_argument("--train-from", default=panel_mod.DEFAULT_TRAIN_RANGE[0])
    p.add_argument("--train-to", default=panel_mod.DEFAULT_TRAIN_RANGE[1])
    p.add_argument("--test-from", default=panel_mod.DEFAULT_TEST_RANGE[0])
    p.add_argument("--test-to", default=panel_mod.DEFAULT_TEST_RANGE[1])
    p.add_argument("--exclude", action="append", default=None,
                   help="excluded range as FROM:TO, repeatable; default Sep 2023")
    p.add_argument("--out", required=True, help="fitted model JSON path")

    p = sub.add_parser("report", help="emit report files from an evals document")
    p.add_argument("--evals", required=True, help="evals.json from the fit stage")
    p.add_argument("--format", choices=report_mod.FORMATS, default="csv")
    p.add_argument("--abs", action="store_true", dest="by_abs",
                   help="rank coefficients by magnitude instead of signed value")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a config")
    p.add_argument("--config", help="JSON or key=value config file")
    _add_run_overrides(p)
    return parser


def _cmd_crawl(args) -> int:
    policy = corpus_mod.CrawlPolicy(
        min_delay_ms=args.min_delay_ms,
        max_concurrent=args.max_concurrent,
        max_retries=args.max_retries,
        user_agent=args.user_agent,
    )
    try:
        start = corpus_mod.parse_date(args.date_from)
        end = corpus_mod.parse_date(args.date_to)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    items = crawl_mod.crawl_archive(
        args.template,
        start,
        end,
        policy,
        args.out,
        article_pattern=args.article_pattern,
    )
    print(f"crawled {len(items)} new items into {args.out}")
    return EXIT_OK


def _parse_aliases(raw: str | None) -> dict:
    if not raw:
        return {}
    aliases = json.loads(raw)
    if not isinstance(aliases, dict):
        raise UsageError("--aliases must be a JSON object")
    return aliases


def _cmd_topics(args) -> int:
    items = corpus_mod.load_corpus(args.corpus)
    aliases = _parse_aliases(args.aliases)
    catalog = topics_mod.build_catalog(items, args.threshold, args.segment_index, aliases)
    topics_mod.write_catalog_csv(catalog, args.catalog_out)
    assigned = topics_mod.assign_topics(items, catalog, args.segment_index, aliases)
    corpus_mod.save_corpus(assigned.items, args.tagged_out)
    print(f"{len(catalog.retained)} topics retained of {len(catalog.entries)}; "
          f"tagged {len(assigned.items)} items")
    return EXIT_OK


def _cmd_score(args) -> int:
    items = corpus_mod.load_corpus(args.corpus)
    if args.engine == "external":
        if not args.scores:
            raise UsageError("engine=external needs --scores")
        outputs = sentiment_mod.load_external_scores(args.scores)
        scores = sentiment_mod.score_items_external(items, outputs, args.epsilon)
    else:
        if args.scores:
            raise UsageError("--scores belongs to engine=external")
        lexicon = (
            sentiment_mod.load_lexicon(args.lexicon)
            if args.lexicon else sentiment_mod.bundled_lexicon()
        )
        scores = sentiment_mod.score_items(items, lexicon, args.alpha)
    sentiment_mod.save_scores(scores, args.out)
    print(f"scored {len(scores)} items -> {args.out}")
    return EXIT_OK


def _cmd_panel(args) -> int:
    items = corpus_mod.load_corpus(args.corpus)
    aliases = _parse_aliases(args.aliases)
    catalog = topics_mod.build_catalog(items, args.threshold, args.segment_index, aliases)
    scores = sentiment_mod.load_scores(args.scores)
    daily = panel_mod.aggregate_daily(items, scores, catalog, args.aggregate)
    out_dir = Path(args.out_dir)
    panel_mod.write_panel_csv(daily, out_dir / "panel.csv")
    ohlc = panel_mod.load_ohlc(args.ohlc)
    joined = panel_mod.join_calendar(daily, ohlc)
    panel_mod.write_joined_csv(joined, out_dir / "joined.csv")
    lags = [int(part) for part in str(args.lags).split(",") if part.strip()]
    for lag in lags:
        matrix = panel_mod.make_lagged(joined, lag)
        panel_mod.write_design_csv(matrix, out_dir / f"design_lag{lag}.csv")
        print(f"design_lag{lag}.csv: {matrix.n_rows} rows x {len(matrix.column_names)} features")
    return EXIT_OK


def _cmd_fit(args) -> int:
    if args.design:
        design_path = Path(args.design)
    elif args.lags is not None:
        design_path = Path(args.artifacts or ".") / f"design_lag{args.lags}.csv"
    else:
        raise UsageError("fit needs --design or --lags (with --artifacts)")
    matrix = panel_mod.read_design_csv(design_path)
    if args.grid:
        grid = models_mod.HyperGrid.from_dict(json.loads(Path(args.grid).read_text("utf-8")))
    else:
        grid = models_mod.HyperGrid()
    exclusions = (
        [tuple(spec.split(":", 1)) for spec in args.exclude]
        if args.exclude is not None else list(panel_mod.DEFAULT_EXCLUSIONS)
    )
    train, test = panel_mod.split(
        matrix, (args.train_from, args.train_to), (args.test_from, args.test_to), exclusions
    )
    scaler = panel_mod.fit_scaler(train)
    fitted = models_mod.grid_search(
        args.model.upper(), grid, scaler.apply(train)
    ).with_scaler(scaler)
    fitted.save(args.out)
    evaluation = report_mod.evaluate(fitted, scaler.apply(test), test.y, "cli")
    print(f"{args.model}: test RMSE {evaluation.rmse_index_units:.4f} "
          f"({test.n_rows} test rows) -> {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    evals_path = Path(args.evals)
    if not evals_path.exists():
        raise DataError(f"evals file not found: {evals_path}")
    records = json.loads(evals_path.read_text("utf-8"))
    if not records:
        raise DataError("nothing to report")
    reports = [
        report_mod.EvalReport(
            model=rec["model"],
            config=rec["config"],
            rmse_index_units=rec["rmse_index_units"],
            predictions=[tuple(p) for p in rec["predictions"]],
            coefficient_table=rec["coefficients"],
            intercept=rec.get("intercept", 0.0),
            top_sentiment=[tuple(t) for t in rec.get("top_sentiment", [])],
        )
        for rec in records
    ]
    paths = report_mod.emit_report(reports, args.format, args.out_dir)
    best = min(reports, key=lambda r: r.rmse_index_units)
    print(f"best: {best.model} ({best.config}) RMSE {best.rmse_index_units:.4f}")
    for name, coef in report_mod.top_k_sentiment_coeffs_from_table(
        best.coefficient_table, args.top_k, args.by_abs
    ):
        print(f"  {name}\t{coef:.6f}")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_run(args) -> int:
    overrides: dict = {}
    for key in ("corpus", "scores", "lexicon", "ohlc", "out_dir",
                "topic_threshold", "topic_segment_index", "aggregate",
                "alpha", "epsilon", "baseline", "grid", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.aliases is not None:
        overrides["topic_aliases"] = _parse_aliases(args.aliases)
    if args.lags is not None:
        overrides["lags"] = [int(part) for part in str(args.lags).split(",") if part.strip()]
    if args.models is not None:
        overrides["models"] = [part.strip().upper() for part in args.models.split(",") if part.strip()]
    if args.formats is not None:
        overrides["report_formats"] = [part.strip() for part in args.formats.split(",") if part.strip()]
    if args.trading_days_only is not None:
        overrides["trading_days_only"] = args.trading_days_only
    if args.exclude is not None:
        overrides["exclusions"] = [spec.split(":", 1) for spec in args.exclude]
    base = load_config(args.config, overrides) if args.config else None
    if base is None:
        config = PipelineConfig.from_mapping(overrides)
    else:
        config = base
    range_overrides = {
        "train_range": (args.train_from, args.train_to),
        "test_range": (args.test_from, args.test_to),
    }
    for field_name, (lo, hi) in range_overrides.items():
        if lo is not None or hi is not None:
            current = getattr(config, field_name)
            setattr(config, field_name,
                    (lo or current[0], hi or current[1]))
    paths = run_pipeline(config)
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "crawl": _cmd_crawl,
    "topics": _cmd_topics,
    "score": _cmd_score,
    "panel": _cmd_panel,
    "fit": _cmd_fit,
    "report": _cmd_report,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
