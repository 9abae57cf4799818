"""Shared builders for the test suite."""

import json
from pathlib import Path

import numpy as np

from sentindex.corpus import NewsItem


def write_jsonl(path: Path, records) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def make_item(i: int, date: str, topic_segment: str = "market", body: str = "flat text") -> NewsItem:
    return NewsItem(
        id=f"item-{i:04d}",
        date=date,
        url=f"https://news.example.com/news/{topic_segment}/slug-{i}/article{i}.cms",
        headline=f"headline {i}",
        body=body,
    )


def make_ohlc_csv(path: Path, rows) -> Path:
    """rows: iterable of (date, open, high, low, close)."""
    lines = ["Date,Open,High,Low,Close"]
    for date, o, h, l, c in rows:
        lines.append(f"{date},{o},{h},{l},{c}")
    path.write_text("\n".join(lines) + "\n", "utf-8")
    return path


def random_design(rng: np.random.Generator, n_rows: int, n_cols: int, scale: float = 1.0):
    X = rng.normal(size=(n_rows, n_cols)) * scale
    beta = rng.normal(size=n_cols)
    y = X @ beta + rng.normal(size=n_rows) * 0.1
    return X, y


# ---------------------------------------------------------------------------
# independent solver oracles
# ---------------------------------------------------------------------------

def ols_normal_oracle(X, y):
    """Normal-equations pseudoinverse solution (centered, min-norm)."""
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    beta = np.linalg.pinv(Xc.T @ Xc) @ Xc.T @ yc
    return float(y_mean - x_mean @ beta), beta


def ridge_normal_oracle(X, y, lam):
    """Closed-form (X'X/n + lam I)^+ X'y/n on centered data."""
    n, p = X.shape
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    beta = np.linalg.pinv(Xc.T @ Xc / n + lam * np.eye(p)) @ (Xc.T @ yc / n)
    return float(y_mean - x_mean @ beta), beta


def grid_scan_2d(objective, radius=4.0, stages=6, points=81):
    """Multi-resolution exhaustive scan of a 2-D objective.

    objective must accept two broadcastable arrays of candidate values and
    return elementwise objective values. Final resolution is far below 1e-6.
    """
    center = np.zeros(2)
    for _ in range(stages):
        g1 = np.linspace(center[0] - radius, center[0] + radius, points)
        g2 = np.linspace(center[1] - radius, center[1] + radius, points)
        B1, B2 = np.meshgrid(g1, g2, indexing="ij")
        values = objective(B1, B2)
        i, j = np.unravel_index(np.argmin(values), values.shape)
        center = np.array([g1[i], g2[j]])
        radius = 4.0 * radius / (points - 1)
    return center


def penalty_objective_grid(X, y, lam, mix, fit_intercept=True):
    """Vectorized centered objective over a (B1, B2) grid."""
    if fit_intercept:
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
    else:
        Xc, yc = X, y
    n = X.shape[0]

    def objective(B1, B2):
        resid = yc[:, None, None] - Xc[:, 0, None, None] * B1[None] - Xc[:, 1, None, None] * B2[None]
        rss = (resid ** 2).sum(axis=0)
        l1 = np.abs(B1) + np.abs(B2)
        l2 = B1 ** 2 + B2 ** 2
        return rss / (2 * n) + lam * (mix * l1 + 0.5 * (1 - mix) * l2)

    return objective
