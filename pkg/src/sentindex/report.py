"""Evaluation metrics, coefficient rankings and report files.

Sentiment coefficients are ranked signed, most positive first, because the
question the tables answer is which topics push the index up; OHLC-derived
lag features never appear in the ranking. RMSE is always reported in
original index units.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError
from .models import FittedModel
from .panel import is_ohlc_feature

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "markdown")


def rmse(predicted, actual) -> float:
    """Root mean squared difference, in whatever units the inputs share."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape or predicted.ndim != 1:
        raise DataError(
            f"prediction/actual shapes differ: {predicted.shape} vs {actual.shape}"
        )
    if predicted.size == 0:
        raise DataError("cannot compute RMSE of empty vectors")
    if not np.isfinite(predicted).all() or not np.isfinite(actual).all():
        raise NumericError("non-finite entries in RMSE inputs")
    diff = predicted - actual
    return float(np.sqrt(np.mean(diff * diff)))


def top_k_sentiment_coeffs_from_table(
    coefficients: dict[str, float], k: int = 5, by_abs: bool = False
) -> list[tuple[str, float]]:
    sentiment = [
        (name, coef) for name, coef in coefficients.items()
        if not is_ohlc_feature(name)
    ]
    if by_abs:
        sentiment.sort(key=lambda nc: (-abs(nc[1]), nc[0]))
    else:
        sentiment.sort(key=lambda nc: (-nc[1], nc[0]))
    return sentiment[:k]


def top_k_sentiment_coeffs(
    model: FittedModel, k: int = 5, by_abs: bool = False
) -> list[tuple[str, float]]:
    """Top-k sentiment lag features by coefficient, OHLC features excluded.

    Signed descending by default ("positively contributing"); ties break on
    the feature name. Asking for more than exist returns them all.
    """
    return top_k_sentiment_coeffs_from_table(model.coefficients, k, by_abs)


@dataclass
class EvalReport:
    """Evaluation of one fitted model on one configuration's test split."""

    model: str
    config: str
    rmse_index_units: float
    predictions: list[tuple[str, float, float]]  # (date, actual, predicted)
    coefficient_table: dict[str, float]
    intercept: float = 0.0
    top_sentiment: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.rmse_index_units < 0:
            raise DataError("rmse must be non-negative")


def evaluate(
    model: FittedModel,
    test_matrix,
    actual: np.ndarray,
    config: str,
    top_k: int = 5,
) -> EvalReport:
    """Score a fitted model on a test matrix against index-unit actuals."""
    from .models import predict  # local to avoid import noise at module load

    predicted = predict(model, test_matrix)
    return EvalReport(
        model=model.spec.kind,
        config=config,
        rmse_index_units=rmse(predicted, actual),
        predictions=[
            (date, float(a), float(p))
            for date, a, p in zip(test_matrix.dates, actual, predicted)
        ],
        coefficient_table=dict(model.coefficients),
        intercept=model.intercept,
        top_sentiment=top_k_sentiment_coeffs(model, top_k),
    )


def _ordered_labels(reports: Sequence[EvalReport]) -> tuple[list[str], list[str]]:
    models, configs = [], []
    for report in reports:
        if report.model not in models:
            models.append(report.model)
        if report.config not in configs:
            configs.append(report.config)
    return models, configs


def comparison_grid(reports: Sequence[EvalReport]) -> tuple[list[str], list[str], dict]:
    """(model order, config order, {(model, config): rmse}) for the grid."""
    if not reports:
        raise DataError("nothing to report")
    models, configs = _ordered_labels(reports)
    cells = {(r.model, r.config): r.rmse_index_units for r in reports}
    return models, configs, cells


def emit_report(
    reports: Sequence[EvalReport],
    fmt: str,
    out_dir: str | Path,
) -> list[Path]:
    """Write the comparison grid, prediction series and coefficient table.

    csv writes comparison.csv / predictions.csv / coefficients.csv; json and
    markdown write a single report document with the same content.
    """
    if fmt not in FORMATS:
        raise DataError(f"format must be one of {FORMATS}, got {fmt!r}")
    if not reports:
        raise DataError("nothing to report")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create report directory {out_dir}: {exc}") from exc
    models, configs, cells = comparison_grid(reports)

    if fmt == "csv":
        comparison = out_dir / "comparison.csv"
        with comparison.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model"] + configs)
            for model in models:
                writer.writerow(
                    [model]
                    + [
                        repr(cells[(model, config)]) if (model, config) in cells else ""
                        for config in configs
                    ]
                )
        predictions = out_dir / "predictions.csv"
        with predictions.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "config", "date", "actual", "predicted"])
            for report in reports:
                for date, actual, predicted in report.predictions:
                    writer.writerow(
                        [report.model, report.config, date, repr(actual), repr(predicted)]
                    )
        coefficients = out_dir / "coefficients.csv"
        with coefficients.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "config", "feature", "coefficient"])
            for report in reports:
                writer.writerow([report.model, report.config, "(intercept)", repr(report.intercept)])
                for feature, coef in report.coefficient_table.items():
                    writer.writerow([report.model, report.config, feature, repr(coef)])
        return [comparison, predictions, coefficients]

    document = {
        "comparison": {
            "models": models,
            "configs": configs,
            "rmse": {f"{m}/{c}": cells[(m, c)] for m, c in cells},
        },
        "reports": [
            {
                "model": r.model,
                "config": r.config,
                "rmse_index_units": r.rmse_index_units,
                "top_sentiment": [[name, coef] for name, coef in r.top_sentiment],
                "intercept": r.intercept,
                "coefficients": r.coefficient_table,
                "predictions": [[d, a, p] for d, a, p in r.predictions],
            }
            for r in reports
        ],
    }
    if fmt == "json":
        path = out_dir / "report.json"
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", "utf-8")
        return [path]

    lines = ["| model | " + " | ".join(configs) + " |",
             "| --- | " + " | ".join("---" for _ in configs) + " |"]
    for model in models:
        row = [model] + [
            f"{cells[(model, config)]:.4f}" if (model, config) in cells else ""
            for config in configs
        ]
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    for report in reports:
        if not report.top_sentiment:
            continue
        lines.append(f"Top sentiment features, {report.model} ({report.config}):")
        lines.append("")
        lines.append("| feature | coefficient |")
        lines.append("| --- | --- |")
        for name, coef in report.top_sentiment:
            lines.append(f"| {name} | {coef:.6f} |")
        lines.append("")
    path = out_dir / "report.md"
    path.write_text("\n".join(lines), "utf-8")
    return [path]


def read_comparison_csv(path: str | Path) -> tuple[list[str], list[str], dict]:
    """Parse comparison.csv back into (models, configs, cells)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"comparison file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "model":
            raise DataError(f"unexpected comparison header: {header}")
        configs = header[1:]
        models, cells = [], {}
        for row in reader:
            if not row:
                continue
            models.append(row[0])
            for config, cell in zip(configs, row[1:]):
                if cell != "":
                    cells[(row[0], config)] = float(cell)
    return models, configs, cells
