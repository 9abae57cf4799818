"""Daily topic panels, OHLC joins, lagged design matrices and splits.

The panel calendar is the news calendar: weekends stay in, and OHLC columns
are forward-filled from the most recent prior trading day after the left
join. Lag features step over these joined calendar rows, so every feature at
row t reads values strictly before t, and the one-day-ahead target is the
close at t itself.

Min-max scaling covers only the OHLC-derived lag features and the target;
sentiment columns pass through untouched. The scaler is fitted on training
rows alone and never clips, so test values may leave [0, 1].
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import NewsItem, parse_date
from .errors import DataError, UsageError
from .sentiment import SentimentScore
from .topics import TopicCatalog

logger = logging.getLogger(__name__)

OHLC_COLUMNS = ("open", "high", "low", "close")

DEFAULT_TRAIN_RANGE = ("2021-01-01", "2023-08-31")
DEFAULT_TEST_RANGE = ("2023-10-01", "2024-02-22")
DEFAULT_EXCLUSIONS = (("2023-09-01", "2023-09-30"),)

AGGREGATES = ("mean", "sum", "last")


def _check_dates_increasing(dates: Sequence[str], what: str) -> None:
    for previous, current in zip(dates, dates[1:]):
        if current <= previous:
            raise DataError(f"{what} dates must be strictly increasing: {previous!r} then {current!r}")


@dataclass
class DailyPanel:
    """date x topic matrix of aggregated sentiment; absent cells are 0."""

    dates: list[str]
    topics: list[str]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.dates), len(self.topics)):
            raise DataError(
                f"panel shape {self.values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.topics)} topics"
            )
        _check_dates_increasing(self.dates, "panel")


@dataclass
class OhlcSeries:
    dates: list[str]
    values: np.ndarray  # n x 4, columns open/high/low/close

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != 4:
            raise DataError("OHLC values must be an n x 4 matrix")
        if len(self.dates) != self.values.shape[0]:
            raise DataError("OHLC dates and values disagree in length")
        _check_dates_increasing(self.dates, "OHLC")

    @property
    def close(self) -> np.ndarray:
        return self.values[:, 3]


@dataclass
class JoinedTable:
    """One row per surviving panel date: topic columns then OHLC columns."""

    dates: list[str]
    columns: list[str]
    values: np.ndarray
    trading_day: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.trading_day = np.asarray(self.trading_day, dtype=bool)


@dataclass
class DesignMatrix:
    """Lagged feature matrix with the aligned one-day-ahead close target."""

    dates: list[str]
    column_names: list[str]
    X: np.ndarray
    y: np.ndarray
    lag_depth: int
    trading_day: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.trading_day is None:
            self.trading_day = np.ones(len(self.dates), dtype=bool)
        self.trading_day = np.asarray(self.trading_day, dtype=bool)
        if self.X.shape != (len(self.dates), len(self.column_names)):
            raise DataError("design matrix shape does not match dates x columns")
        if self.y.shape != (len(self.dates),):
            raise DataError("target length does not match rows")

    @property
    def n_rows(self) -> int:
        return len(self.dates)

    def select(self, names: Sequence[str]) -> "DesignMatrix":
        """Column subset by name, order taken from ``names``."""
        index = {name: i for i, name in enumerate(self.column_names)}
        missing = [name for name in names if name not in index]
        if missing:
            raise DataError(f"unknown design columns: {missing}")
        cols = [index[name] for name in names]
        return DesignMatrix(
            dates=list(self.dates),
            column_names=list(names),
            X=self.X[:, cols].copy(),
            y=self.y.copy(),
            lag_depth=self.lag_depth,
            trading_day=self.trading_day.copy(),
        )

    def rows(self, mask: np.ndarray) -> "DesignMatrix":
        mask = np.asarray(mask, dtype=bool)
        return DesignMatrix(
            dates=[d for d, keep in zip(self.dates, mask) if keep],
            column_names=list(self.column_names),
            X=self.X[mask],
            y=self.y[mask],
            lag_depth=self.lag_depth,
            trading_day=self.trading_day[mask],
        )


def is_ohlc_feature(name: str) -> bool:
    base = name.rsplit("_lag", 1)[0]
    return base in OHLC_COLUMNS


def aggregate_daily(
    items: Iterable[NewsItem],
    scores: Iterable[SentimentScore],
    catalog: TopicCatalog,
    aggregate: str = "mean",
) -> DailyPanel:
    """Collapse per-item scores into one value per (date, topic) cell.

    Multiple articles on the same day and topic combine by the configured
    aggregate (mean by default); combinations with no article stay 0.
    """
    if aggregate not in AGGREGATES:
        raise UsageError(f"aggregate must be one of {AGGREGATES}, got {aggregate!r}")
    by_id = {score.id: score.value for score in scores}
    topics = list(catalog.retained)
    topic_index = {name: i for i, name in enumerate(topics)}
    cells: dict[tuple[str, int], list[float]] = {}
    for item in items:
        if item.topic is None or item.topic not in topic_index:
            continue
        if item.id not in by_id:
            continue
        parse_date(item.date)
        key = (item.date, topic_index[item.topic])
        cells.setdefault(key, []).append(by_id[item.id])
    if not cells:
        raise DataError("no scored items with retained topics to aggregate")
    dates = sorted({date for date, _ in cells})
    date_index = {d: i for i, d in enumerate(dates)}
    values = np.zeros((len(dates), len(topics)))
    for (date, col), bucket in cells.items():
        if aggregate == "mean":
            cell = sum(bucket) / len(bucket)
        elif aggregate == "sum":
            cell = sum(bucket)
        else:
            cell = bucket[-1]
        values[date_index[date], col] = cell
    return DailyPanel(dates=dates, topics=topics, values=values)


def load_ohlc(path: str | Path) -> OhlcSeries:
    """Parse a Date,Open,High,Low,Close CSV into a date-sorted series."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"OHLC file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"no data in OHLC file {path}") from None
        expected = ["Date", "Open", "High", "Low", "Close"]
        if [h.strip() for h in header[:5]] != expected:
            raise DataError(f"OHLC header must start with {expected}, got {header}")
        rows: list[tuple[str, float, float, float, float]] = []
        seen_dates: set[str] = set()
        for rowno, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 5:
                raise DataError(f"expected 5 columns, got {len(row)}", row=rowno)
            date = row[0].strip()
            try:
                parse_date(date)
            except ValueError as exc:
                raise DataError(str(exc), row=rowno) from None
            if date in seen_dates:
                raise DataError(f"duplicate date {date}", row=rowno)
            seen_dates.add(date)
            try:
                o, h, l, c = (float(cell) for cell in row[1:5])
            except ValueError:
                raise DataError(f"non-numeric price in {row[1:5]}", row=rowno) from None
            if min(o, h, l, c) <= 0:
                raise DataError("prices must be positive", row=rowno)
            if not (l <= min(o, c) <= max(o, c) <= h):
                raise DataError(f"violated low<=open,close<=high ordering: {row[1:5]}", row=rowno)
            rows.append((date, o, h, l, c))
    if not rows:
        raise DataError(f"no data in OHLC file {path}")
    rows.sort(key=lambda r: r[0])
    return OhlcSeries(
        dates=[r[0] for r in rows],
        values=np.array([r[1:] for r in rows], dtype=float),
    )


def join_calendar(panel: DailyPanel, ohlc: OhlcSeries) -> JoinedTable:
    """Left join on the news calendar with forward-filled OHLC columns."""
    if not panel.dates:
        raise DataError("panel is empty")
    first_ohlc = ohlc.dates[0]
    dropped = [d for d in panel.dates if d < first_ohlc]
    if dropped:
        logger.warning(
            "dropping %d panel rows before first OHLC date %s", len(dropped), first_ohlc
        )
    kept = [d for d in panel.dates if d >= first_ohlc]
    if not kept:
        raise DataError("panel and OHLC dates do not overlap")
    ohlc_index = {d: i for i, d in enumerate(ohlc.dates)}
    values = np.zeros((len(kept), len(panel.topics) + 4))
    trading = np.zeros(len(kept), dtype=bool)
    cursor = -1
    panel_rows = {d: i for i, d in enumerate(panel.dates)}
    for out_row, date in enumerate(kept):
        values[out_row, : len(panel.topics)] = panel.values[panel_rows[date]]
        if date in ohlc_index:
            cursor = ohlc_index[date]
            trading[out_row] = True
        else:
            # forward fill: advance to the last trading day before this date
            while cursor + 1 < len(ohlc.dates) and ohlc.dates[cursor + 1] < date:
                cursor += 1
        values[out_row, len(panel.topics):] = ohlc.values[cursor]
    return JoinedTable(
        dates=kept,
        columns=list(panel.topics) + list(OHLC_COLUMNS),
        values=values,
        trading_day=trading,
    )


def make_lagged(joined: JoinedTable, lag_depth: int) -> DesignMatrix:
    """Lag every base column 1..L over joined rows; target is same-row close.

    The first L rows have incomplete history and are dropped, leaving
    (topics + 4) * L feature columns whose values all predate their row.
    """
    if lag_depth < 1:
        raise UsageError(f"lag depth must be a positive integer, got {lag_depth}")
    n = len(joined.dates)
    if n < lag_depth + 1:
        raise DataError(f"need at least {lag_depth + 1} joined rows, have {n}")
    close_col = joined.columns.index("close")
    names: list[str] = []
    blocks: list[np.ndarray] = []
    for col, base in enumerate(joined.columns):
        for k in range(1, lag_depth + 1):
            names.append(f"{base}_lag{k}")
            blocks.append(joined.values[lag_depth - k : n - k, col])
    X = np.column_stack(blocks)
    return DesignMatrix(
        dates=list(joined.dates[lag_depth:]),
        column_names=names,
        X=X,
        y=joined.values[lag_depth:, close_col].copy(),
        lag_depth=lag_depth,
        trading_day=joined.trading_day[lag_depth:].copy(),
    )


class MinMaxScaler:
    """Train-rows-only min-max scaling of OHLC lag features and the target."""

    def __init__(self) -> None:
        self.fitted = False
        self.feature_names: list[str] = []
        self.scaled_columns: list[int] = []
        self.col_min: np.ndarray | None = None
        self.col_max: np.ndarray | None = None
        self.y_min: float = 0.0
        self.y_max: float = 0.0

    def fit(self, matrix: DesignMatrix, rows: np.ndarray | None = None) -> "MinMaxScaler":
        mask = np.ones(matrix.n_rows, dtype=bool) if rows is None else np.asarray(rows, dtype=bool)
        if not mask.any():
            raise DataError("cannot fit scaler on zero rows")
        self.feature_names = list(matrix.column_names)
        self.scaled_columns = [
            i for i, name in enumerate(matrix.column_names) if is_ohlc_feature(name)
        ]
        sub = matrix.X[mask][:, self.scaled_columns]
        self.col_min = sub.min(axis=0) if self.scaled_columns else np.zeros(0)
        self.col_max = sub.max(axis=0) if self.scaled_columns else np.zeros(0)
        self.y_min = float(matrix.y[mask].min())
        self.y_max = float(matrix.y[mask].max())
        self.fitted = True
        return self

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise UsageError("scaler applied before fitting")

    @staticmethod
    def _scale(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        span = hi - lo
        out = np.zeros_like(values, dtype=float)
        nonconstant = span != 0
        out[..., nonconstant] = (values[..., nonconstant] - lo[nonconstant]) / span[nonconstant]
        return out

    def apply(self, matrix: DesignMatrix) -> DesignMatrix:
        """Scaled copy; constant training columns map to 0, no clipping."""
        self._require_fitted()
        if list(matrix.column_names) != self.feature_names:
            raise DataError("design columns differ from the scaler's fit columns")
        X = matrix.X.copy()
        if self.scaled_columns:
            X[:, self.scaled_columns] = self._scale(
                matrix.X[:, self.scaled_columns], self.col_min, self.col_max
            )
        y_span = self.y_max - self.y_min
        y = np.zeros_like(matrix.y) if y_span == 0 else (matrix.y - self.y_min) / y_span
        return DesignMatrix(
            dates=list(matrix.dates),
            column_names=list(matrix.column_names),
            X=X,
            y=y,
            lag_depth=matrix.lag_depth,
            trading_day=matrix.trading_day.copy(),
        )

    def invert(self, matrix: DesignMatrix) -> DesignMatrix:
        """Inverse of apply on non-constant columns (constants restore min)."""
        self._require_fitted()
        X = matrix.X.copy()
        if self.scaled_columns:
            span = self.col_max - self.col_min
            X[:, self.scaled_columns] = matrix.X[:, self.scaled_columns] * span + self.col_min
        return DesignMatrix(
            dates=list(matrix.dates),
            column_names=list(matrix.column_names),
            X=X,
            y=self.invert_target(matrix.y),
            lag_depth=matrix.lag_depth,
            trading_day=matrix.trading_day.copy(),
        )

    def invert_target(self, values: np.ndarray) -> np.ndarray:
        self._require_fitted()
        return np.asarray(values, dtype=float) * (self.y_max - self.y_min) + self.y_min

    def scale_target(self, values: np.ndarray) -> np.ndarray:
        self._require_fitted()
        span = self.y_max - self.y_min
        values = np.asarray(values, dtype=float)
        return np.zeros_like(values) if span == 0 else (values - self.y_min) / span

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "feature_names": self.feature_names,
            "scaled_columns": self.scaled_columns,
            "col_min": [float(v) for v in self.col_min],
            "col_max": [float(v) for v in self.col_max],
            "y_min": self.y_min,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MinMaxScaler":
        scaler = cls()
        scaler.feature_names = list(data["feature_names"])
        scaler.scaled_columns = list(data["scaled_columns"])
        scaler.col_min = np.array(data["col_min"], dtype=float)
        scaler.col_max = np.array(data["col_max"], dtype=float)
        scaler.y_min = float(data["y_min"])
        scaler.y_max = float(data["y_max"])
        scaler.fitted = True
        return scaler


def fit_scaler(matrix: DesignMatrix, rows: np.ndarray | None = None) -> MinMaxScaler:
    return MinMaxScaler().fit(matrix, rows)


def apply_scaler(scaler: MinMaxScaler, matrix: DesignMatrix) -> DesignMatrix:
    return scaler.apply(matrix)


def invert_scaler(scaler: MinMaxScaler, matrix: DesignMatrix) -> DesignMatrix:
    return scaler.invert(matrix)


DateRange = tuple[str, str]


def _validate_range(r: DateRange, what: str) -> DateRange:
    try:
        start, end = r
        parse_date(start)
        parse_date(end)
    except ValueError as exc:
        raise UsageError(f"bad {what} range {r!r}: {exc}") from None
    if start > end:
        raise UsageError(f"{what} range start {start} after end {end}")
    return r


def _in_range(date: str, r: DateRange) -> bool:
    return r[0] <= date <= r[1]


def split(
    matrix: DesignMatrix,
    train_range: DateRange = DEFAULT_TRAIN_RANGE,
    test_range: DateRange = DEFAULT_TEST_RANGE,
    exclusions: Sequence[DateRange] = DEFAULT_EXCLUSIONS,
) -> tuple[DesignMatrix, DesignMatrix]:
    """Chronological train/test split by inclusive date ranges.

    Exclusion ranges are removed from both sides; overlapping train/test
    ranges or an empty side are errors.
    """
    _validate_range(train_range, "train")
    _validate_range(test_range, "test")
    for excl in exclusions:
        _validate_range(excl, "exclusion")
    if train_range[0] <= test_range[1] and test_range[0] <= train_range[1]:
        raise UsageError(f"train range {train_range} overlaps test range {test_range}")

    def side_mask(r: DateRange) -> np.ndarray:
        mask = np.array([_in_range(d, r) for d in matrix.dates], dtype=bool)
        for excl in exclusions:
            mask &= ~np.array([_in_range(d, excl) for d in matrix.dates], dtype=bool)
        return mask

    train_mask = side_mask(train_range)
    test_mask = side_mask(test_range)
    if not train_mask.any():
        raise DataError(f"no rows fall in the train range {train_range}")
    if not test_mask.any():
        raise DataError(f"no rows fall in the test range {test_range}")
    return matrix.rows(train_mask), matrix.rows(test_mask)


def write_panel_csv(panel: DailyPanel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + panel.topics)
        for i, date in enumerate(panel.dates):
            writer.writerow([date] + [repr(v) for v in panel.values[i].tolist()])


def read_panel_csv(path: str | Path) -> DailyPanel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"panel file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date":
            raise DataError(f"panel header must start with 'date', got {header}")
        topics = header[1:]
        dates, rows = [], []
        for row in reader:
            if not row:
                continue
            dates.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return DailyPanel(dates=dates, topics=topics, values=np.array(rows, dtype=float))


def write_joined_csv(joined: JoinedTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + joined.columns + ["trading_day"])
        for i, date in enumerate(joined.dates):
            writer.writerow(
                [date]
                + [repr(v) for v in joined.values[i].tolist()]
                + [str(bool(joined.trading_day[i])).lower()]
            )


def read_joined_csv(path: str | Path) -> JoinedTable:
    path = Path(path)
    if not path.exists():
        raise DataError(f"joined file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date" or header[-1] != "trading_day":
            raise DataError(f"unexpected joined header: {header}")
        columns = header[1:-1]
        dates, rows, trading = [], [], []
        for row in reader:
            if not row:
                continue
            dates.append(row[0])
            rows.append([float(v) for v in row[1:-1]])
            trading.append(row[-1] == "true")
    return JoinedTable(
        dates=dates,
        columns=columns,
        values=np.array(rows, dtype=float),
        trading_day=np.array(trading, dtype=bool),
    )


def write_design_csv(matrix: DesignMatrix, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + matrix.column_names + ["target", "trading_day"])
        for i, date in enumerate(matrix.dates):
            writer.writerow(
                [date]
                + [repr(v) for v in matrix.X[i].tolist()]
                + [repr(float(matrix.y[i])), str(bool(matrix.trading_day[i])).lower()]
            )


def read_design_csv(path: str | Path, lag_depth: int | None = None) -> DesignMatrix:
    path = Path(path)
    if not path.exists():
        raise DataError(f"design file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date" or header[-2:] != ["target", "trading_day"]:
            raise DataError(f"unexpected design header: {header}")
        names = header[1:-2]
        if lag_depth is None:
            lags = [int(n.rsplit("_lag", 1)[1]) for n in names if "_lag" in n]
            lag_depth = max(lags) if lags else 1
        dates, rows, ys, trading = [], [], [], []
        for row in reader:
            if not row:
                continue
            dates.append(row[0])
            rows.append([float(v) for v in row[1:-2]])
            ys.append(float(row[-2]))
            trading.append(row[-1] == "true")
    return DesignMatrix(
        dates=dates,
        column_names=names,
        X=np.array(rows, dtype=float),
        y=np.array(ys, dtype=float),
        lag_depth=lag_depth,
        trading_day=np.array(trading, dtype=bool),
    )
