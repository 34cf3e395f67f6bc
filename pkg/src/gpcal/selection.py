"""Kernel comparison by BIC and an ordinary-least-squares baseline.

BIC = -2 L + m log(n) with L the in-sample log marginal likelihood and m
the kernel-hyperparameter count (the noise term is not counted). The
natural log is the default; base 10 is available because the published
comparison tables only reproduce with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gp
from ._parallel import run_indexed
from .errors import GpcalError, InputError
from .kernels import FAMILIES, num_params
from .metrics import EvalReport, evaluate_predictions
from .optimize import OptimizeConfig, optimize_hyperparameters

LOG_BASES = ("e", "10")


def bic(log_marginal: float, m: int, n: int, log_base: str = "e") -> float:
    """Bayesian Information Criterion; lower is better."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if m < 0:
        raise InputError(f"m must be >= 0, got {m}")
    if log_base not in LOG_BASES:
        raise InputError(f"log_base must be one of {LOG_BASES}, got {log_base!r}")
    log_n = math.log(n) if log_base == "e" else math.log10(n)
    return -2.0 * log_marginal + m * log_n


@dataclass(frozen=True)
class BicRow:
    family: str
    log_marginal: float
    m: int
    n: int
    bic: float
    error: str | None = None


@dataclass(frozen=True)
class FamilyResult:
    """One kernel family's optimization outcome within a comparison."""

    family: str
    row: BicRow
    report: EvalReport | None
    model: gp.TrainedModel | None
    noise_std: float | None


def compare_kernels(X, y, families=FAMILIES, config: OptimizeConfig = OptimizeConfig(),
                    log_base: str = "e", level: float = 0.95) -> list[FamilyResult]:
    """Optimize, fit, and score each family; sorted by ascending BIC.

    A numerical failure in one family yields a flagged row instead of
    aborting the whole comparison. Flagged rows sort last.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size

    def run(family):
        try:
            opt = optimize_hyperparameters(X, y, family, config)
            model = gp.fit(X, y, opt.kernel, opt.noise_std)
            row = BicRow(
                family=family,
                log_marginal=model.log_marginal,
                m=opt.kernel.num_params,
                n=n,
                bic=bic(model.log_marginal, opt.kernel.num_params, n, log_base),
            )
            report = evaluate_predictions(y, model.predict(X, level=level), level=level)
            return FamilyResult(family, row, report, model, opt.noise_std)
        except GpcalError as exc:
            row = BicRow(family, math.nan, num_params(family), n, math.nan, error=str(exc))
            return FamilyResult(family, row, None, None, None)

    results = run_indexed(run, list(families))
    return sorted(results, key=lambda fr: (fr.row.error is not None,
                                           fr.row.bic if fr.row.error is None else 0.0))


# -- linear baseline ---------------------------------------------------------


def linear_baseline_fit(X, y) -> np.ndarray:
    """OLS with intercept via SVD least squares.

    Returns (slope_1, ..., slope_N, intercept). Rank-deficient designs
    are rejected rather than silently pseudo-inverted.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    n, dim = X.shape
    if y.size != n:
        raise InputError(f"X has {n} rows but y has {y.size} entries")
    if n <= dim:
        raise InputError(f"need more samples ({n}) than features plus intercept ({dim + 1})")
    design = np.column_stack([X, np.ones(n)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < dim + 1:
        raise InputError(f"design matrix is rank deficient (rank {rank} of {dim + 1})")
    return coef


def linear_baseline_predict(coef, Xstar) -> np.ndarray:
    coef = np.asarray(coef, dtype=float)
    Xstar = np.asarray(Xstar, dtype=float)
    if Xstar.ndim == 1:
        Xstar = Xstar[:, None]
    if Xstar.shape[1] != coef.size - 1:
        raise InputError(
            f"coefficients expect {coef.size - 1} features, got {Xstar.shape[1]}"
        )
    return Xstar @ coef[:-1] + coef[-1]
