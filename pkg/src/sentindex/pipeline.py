"""End-to-end pipeline: corpus -> topics -> sentiment -> panel -> fit -> report.

Every stage writes plain files under the output directory and records a
content hash of its inputs and parameters; reruns with unchanged inputs are
served from these cached artifacts byte-for-byte, and deleting an artifact
recomputes only that stage (and whatever downstream stages see changed
bytes). Nothing in the pipeline is stochastic, so two runs from the same
config and inputs produce identical report files.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Sequence

from . import corpus as corpus_mod
from . import crawl as crawl_mod
from . import models as models_mod
from . import panel as panel_mod
from . import report as report_mod
from . import sentiment as sentiment_mod
from . import topics as topics_mod
from .errors import DataError, PipelineError, UsageError

logger = logging.getLogger(__name__)

ENGINE_LEXICON = "lexicon"
ENGINE_EXTERNAL = "external"

_CONFIG_KEYS = {
    "corpus", "crawl", "lexicon", "scores", "ohlc", "out_dir",
    "topic_threshold", "topic_segment_index", "topic_aliases",
    "lags", "baseline", "aggregate", "alpha", "epsilon",
    "train_range", "test_range", "exclusions",
    "grid", "models", "trading_days_only", "report_formats", "seed",
}


@dataclass
class PipelineConfig:
    ohlc: str | None = None
    out_dir: str | None = None
    corpus: str | None = None
    crawl: dict | None = None
    lexicon: str | None = None
    scores: str | None = None
    topic_threshold: int = topics_mod.DEFAULT_THRESHOLD
    topic_segment_index: int = topics_mod.DEFAULT_SEGMENT_INDEX
    topic_aliases: dict = dc_field(default_factory=lambda: {"markets": "market"})
    lags: list[int] = dc_field(default_factory=lambda: [3, 5])
    baseline: bool = True
    aggregate: str = "mean"
    alpha: float = sentiment_mod.DEFAULT_ALPHA
    epsilon: float = sentiment_mod.DEFAULT_EPSILON
    train_range: tuple[str, str] = panel_mod.DEFAULT_TRAIN_RANGE
    test_range: tuple[str, str] = panel_mod.DEFAULT_TEST_RANGE
    exclusions: list[tuple[str, str]] = dc_field(
        default_factory=lambda: [list(r) for r in panel_mod.DEFAULT_EXCLUSIONS]
    )
    grid: models_mod.HyperGrid = dc_field(default_factory=models_mod.HyperGrid)
    models: list[str] = dc_field(default_factory=lambda: list(models_mod.KINDS))
    trading_days_only: bool = False
    report_formats: list[str] = dc_field(default_factory=lambda: ["csv"])
    seed: int | None = None  # reserved for fixture generation, unused here

    def __post_init__(self) -> None:
        if self.scores and self.lexicon:
            raise UsageError(
                "config selects both sentiment sources; choose lexicon or scores"
            )
        if not self.corpus and not self.crawl:
            raise UsageError("config needs a corpus path or crawl settings")
        if not self.ohlc:
            raise UsageError("config needs an OHLC path")
        if not self.out_dir:
            raise UsageError("config needs an output directory")
        for kind in self.models:
            if kind not in models_mod.KINDS:
                raise UsageError(f"unknown model kind {kind!r}")
        for fmt in self.report_formats:
            if fmt not in report_mod.FORMATS:
                raise UsageError(f"unknown report format {fmt!r}")
        if any(lag < 1 for lag in self.lags) or not self.lags:
            raise UsageError("lags must be positive integers")
        if len(set(self.lags)) != len(self.lags):
            raise UsageError(f"duplicate lag depths in {self.lags}")

    @property
    def engine(self) -> str:
        return ENGINE_EXTERNAL if self.scores else ENGINE_LEXICON

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PipelineConfig":
        unknown = set(mapping) - _CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(mapping)
        if "grid" in kwargs and not isinstance(kwargs["grid"], models_mod.HyperGrid):
            grid_value = kwargs["grid"]
            if isinstance(grid_value, str):
                grid_value = json.loads(Path(grid_value).read_text("utf-8"))
            kwargs["grid"] = models_mod.HyperGrid.from_dict(grid_value)
        if "train_range" in kwargs:
            kwargs["train_range"] = tuple(kwargs["train_range"])
        if "test_range" in kwargs:
            kwargs["test_range"] = tuple(kwargs["test_range"])
        if "exclusions" in kwargs:
            kwargs["exclusions"] = [tuple(r) for r in kwargs["exclusions"]]
        if "lags" in kwargs:
            kwargs["lags"] = [int(lag) for lag in kwargs["lags"]]
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise UsageError(f"bad config: {exc}") from None


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Parse a JSON document or flat key=value file, then apply overrides."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    text = path.read_text("utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        mapping = json.loads(text)
    else:
        mapping = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno} is not key=value: {line!r}")
            key, _, value = line.partition("=")
            value = value.strip()
            try:
                mapping[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                mapping[key.strip()] = value
    if overrides:
        mapping.update(overrides)
    return PipelineConfig.from_mapping(mapping)


def _hash_inputs(params: dict, input_paths: Sequence[Path]) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(params, sort_keys=True, default=str).encode("utf-8"))
    for path in input_paths:
        digest.update(b"\x00")
        digest.update(str(path.name).encode("utf-8"))
        digest.update(b"\x00")
        digest.update(path.read_bytes())
    return digest.hexdigest()


class StageRunner:
    """Hash-keyed stage cache over plain files."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.cache_dir = out_dir / "cache"
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.recomputed: list[str] = []

    def run(
        self,
        name: str,
        params: dict,
        inputs: Sequence[Path],
        outputs: Sequence[Path],
        compute: Callable[[], None],
    ) -> bool:
        """Run the stage unless its key matches and outputs exist; True if ran."""
        for path in inputs:
            if not path.exists():
                raise DataError(f"stage {name}: missing input {path}")
        key = _hash_inputs(params, inputs)
        stamp = self.cache_dir / f"{name}.key"
        if stamp.exists() and stamp.read_text("utf-8") == key and all(
            out.exists() for out in outputs
        ):
            logger.info("stage %s: cached", name)
            return False
        logger.info("stage %s: computing", name)
        try:
            compute()
        except PipelineError as exc:
            raise type(exc)(f"stage {name}: {exc}") from exc
        except OSError as exc:
            raise DataError(f"stage {name}: {exc}") from exc
        for out in outputs:
            if not out.exists():
                raise DataError(f"stage {name} failed to produce {out}")
        stamp.write_text(key, "utf-8")
        self.recomputed.append(name)
        return True


def _config_labels(config: PipelineConfig) -> list[tuple[str, int, bool]]:
    """(label, lag, with_sentiment) for every comparison column."""
    labels: list[tuple[str, int, bool]] = []
    if config.baseline:
        for lag in config.lags:
            labels.append((f"nosent_lag{lag}", lag, False))
    for lag in config.lags:
        labels.append((f"sent_lag{lag}", lag, True))
    return labels


def run_pipeline(config: PipelineConfig) -> list[Path]:
    """Execute every stage, returning the report file paths."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = StageRunner(out_dir)

    # corpus: either a user-supplied file or an incremental crawl store
    if config.corpus:
        corpus_path = Path(config.corpus)
        if not corpus_path.exists():
            raise DataError(f"corpus file not found: {corpus_path}")
    else:
        corpus_path = out_dir / "corpus.jsonl"
        settings = dict(config.crawl or {})
        try:
            template = settings["archive_url_template"]
            start = corpus_mod.parse_date(settings["from"])
            end = corpus_mod.parse_date(settings["to"])
        except KeyError as exc:
            raise UsageError(f"crawl settings need {exc.args[0]!r}") from None
        except ValueError as exc:
            raise UsageError(f"bad crawl date: {exc}") from None
        policy = corpus_mod.CrawlPolicy(
            min_delay_ms=int(settings.get("min_delay_ms", 1000)),
            max_concurrent=int(settings.get("max_concurrent", 1)),
            max_retries=int(settings.get("max_retries", 3)),
            user_agent=settings.get("user_agent", corpus_mod.CrawlPolicy.user_agent),
        )
        crawl_mod.crawl_archive(
            template, start, end, policy, corpus_path,
            article_pattern=settings.get("article_pattern"),
        )

    # topics
    tagged_path = out_dir / "tagged.jsonl"
    catalog_path = out_dir / "catalog.csv"
    topic_params = {
        "threshold": config.topic_threshold,
        "segment_index": config.topic_segment_index,
        "aliases": config.topic_aliases,
    }

    def compute_topics() -> None:
        items = corpus_mod.load_corpus(corpus_path)
        catalog = topics_mod.build_catalog(
            items, config.topic_threshold, config.topic_segment_index, config.topic_aliases
        )
        topics_mod.write_catalog_csv(catalog, catalog_path)
        assigned = topics_mod.assign_topics(
            items, catalog, config.topic_segment_index, config.topic_aliases
        )
        corpus_mod.save_corpus(assigned.items, tagged_path)

    runner.run("topics", topic_params, [corpus_path], [tagged_path, catalog_path],
               compute_topics)

    # sentiment scores
    scores_path = out_dir / "scores.jsonl"
    if config.engine == ENGINE_EXTERNAL:
        external_path = Path(config.scores)
        score_params = {"engine": ENGINE_EXTERNAL, "epsilon": config.epsilon}
        score_inputs = [tagged_path, external_path]

        def compute_scores() -> None:
            items = corpus_mod.load_corpus(tagged_path)
            outputs = sentiment_mod.load_external_scores(external_path)
            scores = sentiment_mod.score_items_external(items, outputs, config.epsilon)
            sentiment_mod.save_scores(scores, scores_path)
    else:
        lexicon_path = Path(config.lexicon) if config.lexicon else None
        score_params = {
            "engine": ENGINE_LEXICON,
            "alpha": config.alpha,
            "lexicon": "bundled" if lexicon_path is None else None,
        }
        score_inputs = [tagged_path] + ([lexicon_path] if lexicon_path else [])

        def compute_scores() -> None:
            items = corpus_mod.load_corpus(tagged_path)
            lexicon = (
                sentiment_mod.load_lexicon(lexicon_path)
                if lexicon_path
                else sentiment_mod.bundled_lexicon()
            )
            scores = sentiment_mod.score_items(items, lexicon, config.alpha)
            sentiment_mod.save_scores(scores, scores_path)

    runner.run("score", score_params, score_inputs, [scores_path], compute_scores)

    # panel, join and lagged designs
    ohlc_path = Path(config.ohlc)
    panel_path = out_dir / "panel.csv"
    joined_path = out_dir / "joined.csv"
    design_paths = {lag: out_dir / f"design_lag{lag}.csv" for lag in config.lags}
    panel_params = {
        "aggregate": config.aggregate,
        "lags": sorted(config.lags),
        "threshold": config.topic_threshold,
        "segment_index": config.topic_segment_index,
        "aliases": config.topic_aliases,
    }

    def compute_panel() -> None:
        items = corpus_mod.load_corpus(tagged_path)
        catalog = topics_mod.build_catalog(
            items, config.topic_threshold, config.topic_segment_index, config.topic_aliases
        )
        scores = sentiment_mod.load_scores(scores_path)
        daily = panel_mod.aggregate_daily(items, scores, catalog, config.aggregate)
        panel_mod.write_panel_csv(daily, panel_path)
        ohlc = panel_mod.load_ohlc(ohlc_path)
        joined = panel_mod.join_calendar(daily, ohlc)
        panel_mod.write_joined_csv(joined, joined_path)
        for lag, design_path in design_paths.items():
            panel_mod.write_design_csv(panel_mod.make_lagged(joined, lag), design_path)

    runner.run(
        "panel", panel_params, [tagged_path, scores_path, ohlc_path],
        [panel_path, joined_path] + list(design_paths.values()), compute_panel,
    )

    # fits and evaluations
    evals_path = out_dir / "evals.json"
    models_dir = out_dir / "models"
    fit_params = {
        "models": config.models,
        "grid": config.grid.to_dict(),
        "train_range": list(config.train_range),
        "test_range": list(config.test_range),
        "exclusions": [list(r) for r in config.exclusions],
        "trading_days_only": config.trading_days_only,
        "baseline": config.baseline,
        "lags": config.lags,
    }

    def compute_fit() -> None:
        models_dir.mkdir(parents=True, exist_ok=True)
        records = []
        for label, lag, with_sentiment in _config_labels(config):
            matrix = panel_mod.read_design_csv(design_paths[lag], lag)
            if not with_sentiment:
                ohlc_names = [
                    name for name in matrix.column_names if panel_mod.is_ohlc_feature(name)
                ]
                matrix = matrix.select(ohlc_names)
            train, test = panel_mod.split(
                matrix, config.train_range, config.test_range,
                [tuple(r) for r in config.exclusions],
            )
            if config.trading_days_only:
                test = test.rows(test.trading_day)
                if test.n_rows == 0:
                    raise DataError(f"{label}: no trading-day rows in the test range")
            scaler = panel_mod.fit_scaler(train)
            train_scaled = scaler.apply(train)
            test_scaled = scaler.apply(test)
            for kind in config.models:
                fitted = models_mod.grid_search(kind, config.grid, train_scaled)
                fitted = fitted.with_scaler(scaler)
                fitted.save(models_dir / f"{kind.lower()}_{label}.json")
                evaluation = report_mod.evaluate(fitted, test_scaled, test.y, label)
                records.append({
                    "model": evaluation.model,
                    "config": evaluation.config,
                    "rmse_index_units": evaluation.rmse_index_units,
                    "predictions": evaluation.predictions,
                    "coefficients": evaluation.coefficient_table,
                    "intercept": evaluation.intercept,
                    "top_sentiment": evaluation.top_sentiment,
                })
        evals_path.write_text(
            json.dumps(records, indent=2, sort_keys=True) + "\n", "utf-8"
        )

    runner.run("fit", fit_params, list(design_paths.values()), [evals_path], compute_fit)

    # report files
    report_outputs: list[Path] = []
    for fmt in config.report_formats:
        report_outputs.extend({
            "csv": [out_dir / "comparison.csv", out_dir / "predictions.csv",
                    out_dir / "coefficients.csv"],
            "json": [out_dir / "report.json"],
            "markdown": [out_dir / "report.md"],
        }[fmt])

    def compute_report() -> None:
        records = json.loads(evals_path.read_text("utf-8"))
        reports = [
            report_mod.EvalReport(
                model=rec["model"],
                config=rec["config"],
                rmse_index_units=rec["rmse_index_units"],
                predictions=[tuple(p) for p in rec["predictions"]],
                coefficient_table=rec["coefficients"],
                intercept=rec["intercept"],
                top_sentiment=[tuple(t) for t in rec["top_sentiment"]],
            )
            for rec in records
        ]
        for fmt in config.report_formats:
            report_mod.emit_report(reports, fmt, out_dir)

    runner.run("report", {"formats": config.report_formats}, [evals_path],
               report_outputs, compute_report)
    return report_outputs


def describe_stages() -> list[str]:
    return ["corpus", "topics", "score", "panel", "fit", "report"]
