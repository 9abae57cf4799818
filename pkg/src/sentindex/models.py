"""Linear model family: OLS, ridge, lasso and elastic net.

Objective conventions, fixed across the package and its tests:

* OLS minimizes RSS.
* Ridge minimizes (1/2n) RSS + (lambda/2) ||beta||_2^2.
* Lasso minimizes (1/2n) RSS + lambda ||beta||_1.
* Elastic net minimizes (1/2n) RSS + lambda (mix ||beta||_1
  + (1-mix)/2 ||beta||_2^2).

The intercept is never penalized: every solver centers X and y, fits on the
centered data, and recovers the intercept from the column means. Lasso and
elastic net use cyclic coordinate descent with soft-thresholding; ridge
solves the normal-equations system (X'X/n + lambda I) beta = X'y/n; OLS uses
an SVD least-squares solve whose rank-deficient answer is the minimum-norm
solution.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError, UsageError
from .panel import DesignMatrix, MinMaxScaler

logger = logging.getLogger(__name__)

OLS = "OLS"
RIDGE = "RIDGE"
LASSO = "LASSO"
ENET = "ENET"

KINDS = (OLS, RIDGE, LASSO, ENET)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-4, 2, 13))
DEFAULT_MIX_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_VAL_FRACTION = 0.2

ILL_CONDITIONED_CUTOFF = 1e-15


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    lam: float = 0.0
    mix: float | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise UsageError(f"unknown model kind {self.kind!r}")
        if self.lam < 0:
            raise UsageError(f"lambda must be >= 0, got {self.lam}")
        if self.kind == ENET:
            if self.mix is None or not (0.0 <= self.mix <= 1.0):
                raise UsageError(f"elastic net mix must lie in [0, 1], got {self.mix}")
        elif self.mix is not None:
            raise UsageError(f"mix is only defined for ENET, not {self.kind}")
        if self.tol <= 0:
            raise UsageError("tol must be positive")


@dataclass
class Diagnostics:
    objective: float
    iterations: int
    condition_number: float
    converged: bool = True
    rank_deficient: bool = False
    validation_rmse: float | None = None


@dataclass
class FittedModel:
    spec: ModelSpec
    intercept: float
    coefficients: dict[str, float]
    diagnostics: Diagnostics
    scaler: MinMaxScaler | None = None

    @property
    def column_names(self) -> list[str]:
        return list(self.coefficients)

    @property
    def beta(self) -> np.ndarray:
        return np.array(list(self.coefficients.values()), dtype=float)

    def with_scaler(self, scaler: MinMaxScaler) -> "FittedModel":
        return FittedModel(self.spec, self.intercept, dict(self.coefficients),
                           self.diagnostics, scaler)

    def to_dict(self) -> dict:
        record = {
            "spec": {
                "kind": self.spec.kind,
                "lambda": self.spec.lam,
                "mix": self.spec.mix,
                "tol": self.spec.tol,
                "max_iter": self.spec.max_iter,
            },
            "intercept": self.intercept,
            "coefficients": self.coefficients,
            "diagnostics": {
                "objective": self.diagnostics.objective,
                "iterations": self.diagnostics.iterations,
                "condition_number": self.diagnostics.condition_number,
                "converged": self.diagnostics.converged,
                "rank_deficient": self.diagnostics.rank_deficient,
                "validation_rmse": self.diagnostics.validation_rmse,
            },
        }
        if self.scaler is not None:
            record["scaler"] = self.scaler.to_dict()
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "FittedModel":
        spec = ModelSpec(
            kind=record["spec"]["kind"],
            lam=record["spec"]["lambda"],
            mix=record["spec"]["mix"],
            tol=record["spec"]["tol"],
            max_iter=record["spec"]["max_iter"],
        )
        diag = Diagnostics(**record["diagnostics"])
        scaler = MinMaxScaler.from_dict(record["scaler"]) if "scaler" in record else None
        return cls(spec, record["intercept"], dict(record["coefficients"]), diag, scaler)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FittedModel":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _as_arrays(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DataError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise DataError(f"y length {y.shape} does not match {X.shape[0]} rows")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise NumericError("non-finite entries in X or y")
    return X, y


def _names_for(X: np.ndarray, column_names: Sequence[str] | None) -> list[str]:
    if column_names is None:
        return [f"x{i}" for i in range(X.shape[1])]
    names = list(column_names)
    if len(names) != X.shape[1]:
        raise DataError(f"{len(names)} names for {X.shape[1]} columns")
    return names


def _center(X: np.ndarray, y: np.ndarray, fit_intercept: bool = True):
    """Centered copies plus the means; a no-intercept fit centers on zero."""
    if not fit_intercept:
        return X, y, np.zeros(X.shape[1]), 0.0
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    return X - x_mean, y - y_mean, x_mean, y_mean


def condition_number(X) -> float:
    """Ratio of extreme singular values; rank-deficient matrices report inf."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise DataError("cannot compute the condition number of an empty matrix")
    singular = np.linalg.svd(X, compute_uv=False)
    largest = float(singular[0])
    smallest = float(singular[-1])
    if largest == 0.0 or smallest < ILL_CONDITIONED_CUTOFF * largest:
        return float("inf")
    return largest / smallest


def soft_threshold(z: float, t: float) -> float:
    """sign(z) * max(|z| - t, 0), the one-dimensional lasso update."""
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def penalized_objective(X, y, beta, intercept, lam_l1, lam_l2) -> float:
    """(1/2n)||y - intercept - X beta||^2 + lam_l1 ||beta||_1 + (lam_l2/2)||beta||_2^2."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    r = y - intercept - X @ beta
    n = X.shape[0]
    return float(
        (r @ r) / (2 * n)
        + lam_l1 * np.abs(beta).sum()
        + 0.5 * lam_l2 * (beta @ beta)
    )


def _coordinate_descent(
    Xc: np.ndarray,
    yc: np.ndarray,
    lam_l1: float,
    lam_l2: float,
    tol: float,
    max_iter: int,
    beta0: np.ndarray | None = None,
) -> tuple[np.ndarray, int, bool, list[float]]:
    """Cyclic coordinate descent on centered data.

    Returns (beta, sweeps, converged, per-sweep objective values). Stops when
    the largest coefficient change in a sweep drops below tol.
    """
    n, p = Xc.shape
    col_sq = (Xc * Xc).sum(axis=0) / n
    beta = np.zeros(p) if beta0 is None else beta0.astype(float).copy()
    r = yc - Xc @ beta
    objectives: list[float] = []
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            old = beta[j]
            if col_sq[j] == 0.0:
                beta[j] = 0.0
                continue
            rho = (Xc[:, j] @ r) / n + col_sq[j] * old
            new = soft_threshold(rho, lam_l1) / (col_sq[j] + lam_l2)
            if new != old:
                r += Xc[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        objectives.append(float((r @ r) / (2 * n)
                                + lam_l1 * np.abs(beta).sum()
                                + 0.5 * lam_l2 * (beta @ beta)))
        if max_delta < tol:
            converged = True
            break
    return beta, sweeps, converged, objectives


def lasso_lambda_max(X, y) -> float:
    """Smallest lambda at which every lasso coefficient is exactly zero.

    Equals ||X'(y - mean(y))||_inf / n, evaluated per column with the same
    arithmetic as the coordinate-descent sweep so that fitting at exactly
    this lambda soft-thresholds every coefficient to zero, ulp for ulp.
    """
    X, y = _as_arrays(X, y)
    n = X.shape[0]
    Xc, yc, _, _ = _center(X, y)
    return max(abs(float(Xc[:, j] @ yc) / n) for j in range(X.shape[1]))


def lasso_kkt_violation(X, y, beta, intercept, lam: float, mix: float = 1.0) -> float:
    """Worst-case KKT residual for a lasso/elastic-net candidate solution.

    Zero coefficients require |X_j'r/n| <= lam*mix; active ones require the
    subgradient to vanish. Returns the largest violation in either case.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = X.shape[0]
    r = y - intercept - X @ beta
    grad = X.T @ r / n - lam * (1.0 - mix) * beta
    lam_l1 = lam * mix
    worst = 0.0
    for j in range(X.shape[1]):
        if beta[j] == 0.0:
            worst = max(worst, abs(grad[j]) - lam_l1)
        else:
            worst = max(worst, abs(grad[j] - lam_l1 * np.sign(beta[j])))
    return worst


def fit_ols(X, y, column_names: Sequence[str] | None = None,
            fit_intercept: bool = True) -> FittedModel:
    """Least squares via SVD; rank-deficient designs get the minimum-norm fit."""
    X, y = _as_arrays(X, y)
    if X.shape[0] < 2:
        raise DataError(f"need at least 2 rows to fit, got {X.shape[0]}")
    names = _names_for(X, column_names)
    Xc, yc, x_mean, y_mean = _center(X, y, fit_intercept)
    beta, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
    rank_deficient = rank < X.shape[1]
    if rank_deficient:
        logger.warning("design matrix is rank deficient (rank %d of %d); "
                       "returning the minimum-norm solution", rank, X.shape[1])
    intercept = float(y_mean - x_mean @ beta)
    residual = yc - Xc @ beta
    diag = Diagnostics(
        objective=float(residual @ residual),
        iterations=1,
        condition_number=condition_number(Xc),
        rank_deficient=bool(rank_deficient),
    )
    return FittedModel(ModelSpec(OLS), intercept, dict(zip(names, beta.tolist())), diag)


def fit_ridge(X, y, lam: float, column_names: Sequence[str] | None = None,
              fit_intercept: bool = True) -> FittedModel:
    """Solve (X'X/n + lambda I) beta = X'y/n on centered data."""
    spec = ModelSpec(RIDGE, lam=lam)
    X, y = _as_arrays(X, y)
    if X.shape[0] < 2:
        raise DataError(f"need at least 2 rows to fit, got {X.shape[0]}")
    names = _names_for(X, column_names)
    Xc, yc, x_mean, y_mean = _center(X, y, fit_intercept)
    n, p = Xc.shape
    gram = Xc.T @ Xc / n + lam * np.eye(p)
    rhs = Xc.T @ yc / n
    if lam == 0.0:
        beta, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
        if rank < p:
            logger.warning("lambda = 0 on a rank-deficient design; minimum-norm solution")
    else:
        try:
            beta = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"ridge system solve failed: {exc}") from None
    intercept = float(y_mean - x_mean @ beta)
    diag = Diagnostics(
        objective=penalized_objective(Xc, yc, beta, 0.0, 0.0, lam),
        iterations=1,
        condition_number=condition_number(Xc),
    )
    return FittedModel(spec, intercept, dict(zip(names, beta.tolist())), diag)


def fit_lasso(
    X, y, lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    column_names: Sequence[str] | None = None,
    beta0: np.ndarray | None = None,
    fit_intercept: bool = True,
) -> FittedModel:
    return _fit_cd(ModelSpec(LASSO, lam=lam, tol=tol, max_iter=max_iter), X, y,
                   column_names, beta0, fit_intercept)


def fit_elastic_net(
    X, y, lam: float, mix: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    column_names: Sequence[str] | None = None,
    beta0: np.ndarray | None = None,
    fit_intercept: bool = True,
) -> FittedModel:
    return _fit_cd(ModelSpec(ENET, lam=lam, mix=mix, tol=tol, max_iter=max_iter), X, y,
                   column_names, beta0, fit_intercept)


def _fit_cd(
    spec: ModelSpec,
    X, y,
    column_names: Sequence[str] | None,
    beta0: np.ndarray | None,
    fit_intercept: bool = True,
) -> FittedModel:
    X, y = _as_arrays(X, y)
    if X.shape[0] < 2:
        raise DataError(f"need at least 2 rows to fit, got {X.shape[0]}")
    names = _names_for(X, column_names)
    mix = 1.0 if spec.kind == LASSO else float(spec.mix)
    lam_l1 = spec.lam * mix
    lam_l2 = spec.lam * (1.0 - mix)
    Xc, yc, x_mean, y_mean = _center(X, y, fit_intercept)
    beta, sweeps, converged, objectives = _coordinate_descent(
        Xc, yc, lam_l1, lam_l2, spec.tol, spec.max_iter, beta0
    )
    if not converged:
        logger.warning("%s coordinate descent hit max_iter=%d without converging "
                       "(tol %g)", spec.kind, spec.max_iter, spec.tol)
    intercept = float(y_mean - x_mean @ beta)
    diag = Diagnostics(
        objective=objectives[-1] if objectives else 0.0,
        iterations=sweeps,
        condition_number=condition_number(Xc),
        converged=converged,
    )
    return FittedModel(spec, intercept, dict(zip(names, beta.tolist())), diag)


def fit(spec: ModelSpec, X, y, column_names: Sequence[str] | None = None) -> FittedModel:
    if spec.kind == OLS:
        return fit_ols(X, y, column_names)
    if spec.kind == RIDGE:
        return fit_ridge(X, y, spec.lam, column_names)
    if spec.kind == LASSO:
        return fit_lasso(X, y, spec.lam, spec.tol, spec.max_iter, column_names)
    return fit_elastic_net(X, y, spec.lam, spec.mix, spec.tol, spec.max_iter, column_names)


def predict(model: FittedModel, X, column_names: Sequence[str] | None = None) -> np.ndarray:
    """intercept + X beta, aligned by column name, in original target units.

    Accepts a DesignMatrix or a plain array plus names. When the model
    carries a scaler the linear prediction is inverse-transformed back to
    index units.
    """
    if isinstance(X, DesignMatrix):
        column_names = X.column_names
        X = X.X
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"X must be 2-D, got shape {X.shape}")
    names = _names_for(X, column_names)
    model_names = model.column_names
    if names != model_names:
        missing = [n for n in model_names if n not in names]
        if missing:
            raise DataError(f"prediction matrix is missing column {missing[0]!r}")
        extra = [n for n in names if n not in model_names]
        if extra:
            raise DataError(f"prediction matrix has unknown column {extra[0]!r}")
        order = [names.index(n) for n in model_names]
        X = X[:, order]
    yhat = model.intercept + X @ model.beta
    if model.scaler is not None:
        yhat = model.scaler.invert_target(yhat)
    return yhat


@dataclass
class HyperGrid:
    """Candidate hyperparameters plus the chronological validation scheme."""

    lambdas: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    mixes: tuple[float, ...] = DEFAULT_MIX_GRID
    val_fraction: float = DEFAULT_VAL_FRACTION
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if not self.lambdas:
            raise UsageError("lambda grid must be non-empty")
        if not self.mixes:
            raise UsageError("mix grid must be non-empty")
        if not (0.0 < self.val_fraction < 1.0):
            raise UsageError("validation fraction must lie strictly inside (0, 1)")

    def points(self, kind: str) -> list[ModelSpec]:
        if kind == OLS:
            return [ModelSpec(OLS)]
        if kind == RIDGE:
            return [ModelSpec(RIDGE, lam=lam) for lam in self.lambdas]
        if kind == LASSO:
            return [ModelSpec(LASSO, lam=lam, tol=self.tol, max_iter=self.max_iter)
                    for lam in self.lambdas]
        if kind == ENET:
            return [ModelSpec(ENET, lam=lam, mix=mix, tol=self.tol, max_iter=self.max_iter)
                    for mix in self.mixes for lam in self.lambdas]
        raise UsageError(f"unknown model kind {kind!r}")

    def to_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "mixes": list(self.mixes),
            "val_fraction": self.val_fraction,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HyperGrid":
        return cls(
            lambdas=tuple(data.get("lambdas", DEFAULT_LAMBDA_GRID)),
            mixes=tuple(data.get("mixes", DEFAULT_MIX_GRID)),
            val_fraction=data.get("val_fraction", DEFAULT_VAL_FRACTION),
            tol=data.get("tol", DEFAULT_TOL),
            max_iter=data.get("max_iter", DEFAULT_MAX_ITER),
        )


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean(d * d)))


def grid_search(kind: str, grid: HyperGrid, matrix: DesignMatrix) -> FittedModel:
    """Pick the grid point with the lowest RMSE on the chronological tail.

    Each candidate fits on the head of the training rows and scores on the
    held-out tail; ties break toward smaller lambda then smaller mix, and
    the winner refits on the full training set. Warm starts run down each
    lambda path, which leaves converged solutions unchanged.
    """
    n = matrix.n_rows
    n_val = int(round(n * grid.val_fraction))
    n_fit = n - n_val
    if n_val < 1:
        raise DataError(f"validation tail is empty ({n} rows at fraction {grid.val_fraction})")
    if n_fit < 2:
        raise DataError(f"too few fit rows ({n_fit}) for grid search")
    head = matrix.rows(np.arange(n) < n_fit)
    tail = matrix.rows(np.arange(n) >= n_fit)

    points = grid.points(kind)
    # warm-start order: within each mix, largest lambda first
    order = sorted(range(len(points)),
                   key=lambda i: (points[i].mix or 0.0, -points[i].lam))
    scored: list[tuple[float, float, float, ModelSpec]] = []
    warm: dict[float, np.ndarray] = {}
    for i in order:
        spec = points[i]
        if spec.kind in (LASSO, ENET):
            key = 1.0 if spec.mix is None else spec.mix
            candidate = _fit_cd(spec, head.X, head.y, head.column_names, warm.get(key))
            warm[key] = candidate.beta
        else:
            candidate = fit(spec, head.X, head.y, head.column_names)
        val_rmse = _rmse(predict(candidate, tail), tail.y)
        scored.append((val_rmse, spec.lam, spec.mix or 0.0, spec))
    best_rmse, _, _, best_spec = min(scored, key=lambda s: (s[0], s[1], s[2]))
    winner = fit(best_spec, matrix.X, matrix.y, matrix.column_names)
    winner.diagnostics.validation_rmse = best_rmse
    return winner
