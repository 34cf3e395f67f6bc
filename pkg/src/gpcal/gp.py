"""Exact GP regression via Cholesky factorization of the noisy covariance.

A model is fit once: K_y = K(X, X) + noise_std^2 I is factorized as
L L^T, the weight vector alpha = K_y^{-1} (y - mean(y)) is solved through
the triangular factor, and predictions reduce to inner products plus
triangular solves. Training targets are centered before fitting; the
offset is stored on the model and added back to predictive means.

The log marginal likelihood splits into a data-fit term
-0.5 yc^T alpha, a complexity term -sum(log diag L), and the constant
-(n/2) log 2pi; its gradient with respect to log-hyperparameters (kernel
parameters followed by log noise_std) uses the trace identity over
(alpha alpha^T - K_y^{-1}) without densifying the outer product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotri
from scipy.stats import norm

from .data import NormalizationTransform
from .errors import InputError, NumericalError, SchemaError
from .kernels import Kernel

MODEL_FORMAT_HEADER = "gpcal-model v1"

# round-off this far below zero in a predictive variance is clamped;
# anything more negative is treated as a numerical failure
_VARIANCE_CLAMP = 1e-9


def _validate_training_data(X, y, noise_std):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"X must be a non-empty 2-D array, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise InputError("training data contains NaN or Inf")
    if not (np.isfinite(noise_std) and noise_std > 0.0):
        raise InputError(f"noise_std must be finite and positive, got {noise_std!r}")
    return X, y


def _factorize(K, noise_std):
    """Cholesky factor of K + noise_std^2 I, with one jitter retry."""
    n = K.shape[0]
    Ky = K + noise_std**2 * np.eye(n)
    try:
        return np.linalg.cholesky(Ky)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * np.trace(Ky) / n
    try:
        return np.linalg.cholesky(Ky + jitter * np.eye(n))
    except np.linalg.LinAlgError:
        raise NumericalError(
            f"covariance matrix not positive definite (jitter {jitter:g} retried)",
            jitter=jitter,
        ) from None


def _solve_chol(L, b):
    return cho_solve((L, True), b)


def _chol_inverse(L):
    """Full inverse of K_y from its lower Cholesky factor."""
    inv, info = dpotri(L, lower=1)
    if info != 0:
        raise NumericalError(f"triangular inversion failed (lapack info {info})")
    return np.tril(inv) + np.tril(inv, -1).T


def _lml_terms(L, yc, alpha):
    n = yc.shape[0]
    data_fit = -0.5 * float(yc @ alpha)
    complexity = -float(np.sum(np.log(np.diag(L))))
    normalization = -0.5 * n * math.log(2.0 * math.pi)
    return data_fit, complexity, normalization


@dataclass(frozen=True)
class Prediction:
    """Posterior summary at one test input. Wind speed units.

    ``latent_var`` is the posterior variance of the underlying function;
    ``predictive_var`` adds the observation-noise variance and is what
    the credible interval is built from.
    """

    mean: float
    latent_var: float
    predictive_var: float
    interval_low: float
    interval_high: float


def credible_interval(prediction: Prediction, level: float) -> tuple[float, float]:
    """Two-sided central interval mean -/+ z(level) * predictive std."""
    z = _normal_quantile(level)
    half = z * math.sqrt(prediction.predictive_var)
    return prediction.mean - half, prediction.mean + half


def _normal_quantile(level: float) -> float:
    if not (isinstance(level, (int, float)) and 0.0 < level < 1.0):
        raise InputError(f"interval level must lie in (0, 1), got {level!r}")
    return float(norm.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class TrainedModel:
    """Immutable fitted GP. Arrays are owned by the model; do not mutate."""

    train_inputs: np.ndarray
    kernel: Kernel
    noise_std: float
    chol_factor: np.ndarray
    alpha: np.ndarray
    target_offset: float
    input_transform: NormalizationTransform | None
    log_marginal: float

    @property
    def n_train(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.train_inputs.shape[1]

    def predict(self, Xstar, level: float = 0.95, full_cov: bool = False):
        """Posterior predictions at the rows of Xstar (normalized units).

        Returns a list of Prediction; with ``full_cov=True`` also returns
        the dense latent posterior covariance matrix as a second value.
        Only the variance diagonal is used for intervals either way.
        """
        z = _normal_quantile(level)
        Xs = np.asarray(Xstar, dtype=float)
        if Xs.ndim == 1:
            Xs = Xs[:, None]
        if Xs.ndim != 2 or Xs.shape[1] != self.input_dim:
            raise InputError(
                f"test inputs must have {self.input_dim} columns, got shape {Xs.shape}"
            )
        if Xs.shape[0] == 0:
            raise InputError("no test inputs given")
        if not np.all(np.isfinite(Xs)):
            raise InputError("test inputs contain NaN or Inf")

        ks = self.kernel.matrix(Xs, self.train_inputs)
        mean = ks @ self.alpha + self.target_offset
        v = solve_triangular(self.chol_factor, ks.T, lower=True)
        latent = self.kernel.signal_std**2 - np.einsum("ij,ij->j", v, v)
        if latent.min() < -_VARIANCE_CLAMP:
            raise NumericalError(
                f"negative posterior variance {latent.min():g} beyond round-off"
            )
        latent = np.maximum(latent, 0.0)
        pred_var = latent + self.noise_std**2
        half = z * np.sqrt(pred_var)
        predictions = [
            Prediction(float(m), float(lv), float(pv), float(m - h), float(m + h))
            for m, lv, pv, h in zip(mean, latent, pred_var, half)
        ]
        if full_cov:
            cov = self.kernel.matrix(Xs) - v.T @ v
            return predictions, cov
        return predictions

    def save(self, path) -> None:
        save_model(self, path)


def fit(X, y, kernel: Kernel, noise_std: float,
        input_transform: NormalizationTransform | None = None) -> TrainedModel:
    """Fit an exact GP: factorize K_y once and solve for alpha.

    ``X`` is expected in normalized units when ``input_transform`` is
    given; the transform is carried on the model so prediction pipelines
    can normalize raw inputs consistently.
    """
    X, y = _validate_training_data(X, y, noise_std)
    offset = float(np.mean(y))
    yc = y - offset
    L = _factorize(kernel.matrix(X), noise_std)
    alpha = _solve_chol(L, yc)
    lml = float(sum(_lml_terms(L, yc, alpha)))
    return TrainedModel(
        train_inputs=X,
        kernel=kernel,
        noise_std=float(noise_std),
        chol_factor=L,
        alpha=alpha,
        target_offset=offset,
        input_transform=input_transform,
        log_marginal=lml,
    )


def log_marginal_terms(X, y, kernel: Kernel, noise_std: float, center: bool = True):
    """(data-fit, complexity, normalization) terms of the log marginal.

    ``center=False`` evaluates the likelihood on the targets as given,
    for callers that have already centered (or deliberately not).
    """
    X, y = _validate_training_data(X, y, noise_std)
    yc = y - np.mean(y) if center else y
    L = _factorize(kernel.matrix(X), noise_std)
    alpha = _solve_chol(L, yc)
    return _lml_terms(L, yc, alpha)


def log_marginal_likelihood(X, y, kernel: Kernel, noise_std: float,
                            center: bool = True) -> float:
    """Log marginal likelihood of the (centered) targets under the GP prior."""
    return float(sum(log_marginal_terms(X, y, kernel, noise_std, center=center)))


def log_marginal_value_and_gradient(X, y, kernel: Kernel, noise_std: float,
                                    center: bool = True):
    """Log marginal likelihood and its gradient, sharing one factorization.

    The gradient is taken with respect to the log-hyperparameters, kernel
    parameters first (in ``kernel.param_names`` order) then log noise_std.
    Per-parameter cost after the factorization is O(n^2).
    """
    X, y = _validate_training_data(X, y, noise_std)
    yc = y - np.mean(y) if center else y
    L = _factorize(kernel.matrix(X), noise_std)
    alpha = _solve_chol(L, yc)
    value = float(sum(_lml_terms(L, yc, alpha)))

    Kinv = _chol_inverse(L)
    grad = np.empty(kernel.num_params + 1)
    for i, dK in enumerate(kernel.grad_matrices(X)):
        quad = float(alpha @ (dK @ alpha))
        grad[i] = 0.5 * (quad - float(np.sum(Kinv * dK)))
    # d K_y / d log(noise_std) = 2 noise_std^2 I
    sn2 = noise_std**2
    grad[-1] = sn2 * (float(alpha @ alpha) - float(np.trace(Kinv)))
    return value, grad


def log_marginal_gradient(X, y, kernel: Kernel, noise_std: float,
                          center: bool = True) -> np.ndarray:
    """Gradient of the log marginal likelihood over log-hyperparameters."""
    return log_marginal_value_and_gradient(X, y, kernel, noise_std, center=center)[1]


# -- model file format ----------------------------------------------------
#
# Plain text, one record per line, 17-significant-digit decimals:
#
#   gpcal-model v1
#   kernel <family>
#   log_params <v> ...
#   noise_std <v>
#   target_offset <v>
#   input_dim <N>
#   transform_min <v> ...     (present only when a transform is stored)
#   transform_max <v> ...
#   n_train <n>
#   data <x_1> ... <x_N> <alpha_i>     (n lines)


def _fmt(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in np.atleast_1d(values))


def save_model(model: TrainedModel, path) -> None:
    lines = [
        MODEL_FORMAT_HEADER,
        f"kernel {model.kernel.family}",
        f"log_params {_fmt(model.kernel.log_params)}",
        f"noise_std {_fmt(model.noise_std)}",
        f"target_offset {_fmt(model.target_offset)}",
        f"input_dim {model.input_dim}",
    ]
    if model.input_transform is not None:
        lines.append(f"transform_min {_fmt(model.input_transform.mins)}")
        lines.append(f"transform_max {_fmt(model.input_transform.maxs)}")
    lines.append(f"n_train {model.n_train}")
    for row, a in zip(model.train_inputs, model.alpha):
        lines.append(f"data {_fmt(row)} {_fmt(a)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    """Load a saved model and rebuild its factorization.

    The Cholesky factor and log marginal are recomputed from the stored
    inputs and hyperparameters; with identical arithmetic this reproduces
    the original predictions.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise SchemaError(f"cannot read model file {path}: {exc}") from exc
    if not lines or lines[0] != MODEL_FORMAT_HEADER:
        found = lines[0] if lines else "<empty file>"
        raise SchemaError(
            f"unsupported model format: expected header {MODEL_FORMAT_HEADER!r}, got {found!r}"
        )

    fields: dict[str, str] = {}
    data_lines: list[str] = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        key, _, rest = ln.partition(" ")
        if key == "data":
            data_lines.append(rest)
        else:
            fields[key] = rest

    try:
        family = fields["kernel"]
        log_params = np.array([float(v) for v in fields["log_params"].split()])
        noise_std = float(fields["noise_std"])
        offset = float(fields["target_offset"])
        dim = int(fields["input_dim"])
        n = int(fields["n_train"])
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"malformed model file {path}: {exc}") from exc

    transform = None
    if "transform_min" in fields or "transform_max" in fields:
        try:
            mins = tuple(float(v) for v in fields["transform_min"].split())
            maxs = tuple(float(v) for v in fields["transform_max"].split())
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"malformed transform in model file {path}: {exc}") from exc
        transform = NormalizationTransform(mins, maxs)

    if len(data_lines) != n:
        raise SchemaError(f"model file {path}: expected {n} data lines, found {len(data_lines)}")
    X = np.empty((n, dim))
    alpha = np.empty(n)
    for i, rest in enumerate(data_lines):
        parts = rest.split()
        if len(parts) != dim + 1:
            raise SchemaError(
                f"model file {path}: data line {i} has {len(parts)} fields, expected {dim + 1}"
            )
        values = [float(v) for v in parts]
        X[i] = values[:dim]
        alpha[i] = values[dim]

    kernel = Kernel.from_log_params(family, log_params)
    L = _factorize(kernel.matrix(X), noise_std)
    # stored alpha solves K_y alpha = yc; recover yc to restate the likelihood
    Ky = kernel.matrix(X) + noise_std**2 * np.eye(n)
    yc = Ky @ alpha
    lml = float(sum(_lml_terms(L, yc, alpha)))
    return TrainedModel(
        train_inputs=X,
        kernel=kernel,
        noise_std=noise_std,
        chol_factor=L,
        alpha=alpha,
        target_offset=offset,
        input_transform=transform,
        log_marginal=lml,
    )
