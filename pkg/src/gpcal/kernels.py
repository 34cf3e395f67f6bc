"""Stationary covariance functions for GP regression.

Four isotropic families over Euclidean distance r = ||x - x'||:

    se        k(r) = sf^2 * exp(-r^2 / (2 l^2))
    exp       k(r) = sf^2 * exp(-r / l)
    matern52  k(r) = sf^2 * (1 + s + s^2/3) * exp(-s),   s = sqrt(5) r / l
    rq        k(r) = sf^2 * (1 + r^2 / (2 a l^2))^(-a)

with signal amplitude sf, length-scale l, and (rq only) shape a.
Hyperparameters are strictly positive and are optimized in log-space;
``grad_matrices`` therefore returns derivatives with respect to the
*log* of each hyperparameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError

FAMILIES = ("se", "exp", "matern52", "rq")

# log-hyperparameter labels, in vector order
_PARAM_NAMES = {
    "se": ("signal_std", "length_scale"),
    "exp": ("signal_std", "length_scale"),
    "matern52": ("signal_std", "length_scale"),
    "rq": ("signal_std", "length_scale", "shape_alpha"),
}

_SQRT5 = math.sqrt(5.0)


def _check_positive(name: str, value: float) -> None:
    if not (np.isfinite(value) and value > 0.0):
        raise InputError(f"{name} must be a finite positive number, got {value!r}")


def _as_matrix(X, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise InputError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    return X


def num_params(family: str) -> int:
    """Hyperparameter count of a family (excludes the noise term)."""
    if family not in FAMILIES:
        raise InputError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")
    return len(_PARAM_NAMES[family])


def pairwise_distances(X, X2=None) -> np.ndarray:
    """Euclidean distance matrix between the rows of X and X2 (or X itself)."""
    X = _as_matrix(X)
    if X2 is None:
        X2 = X
    else:
        X2 = _as_matrix(X2, "X2")
        if X2.shape[1] != X.shape[1]:
            raise InputError(
                f"input dimension mismatch: {X.shape[1]} vs {X2.shape[1]} columns"
            )
    return cdist(X, X2)


@dataclass(frozen=True)
class Kernel:
    """One covariance family plus its hyperparameters. Immutable.

    ``shape_alpha`` is required for the "rq" family and must be None for
    all others.
    """

    family: str
    signal_std: float
    length_scale: float
    shape_alpha: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        _check_positive("signal_std", self.signal_std)
        _check_positive("length_scale", self.length_scale)
        if self.family == "rq":
            if self.shape_alpha is None:
                raise InputError("rq kernel requires shape_alpha")
            _check_positive("shape_alpha", self.shape_alpha)
        elif self.shape_alpha is not None:
            raise InputError(f"{self.family} kernel takes no shape_alpha")

    @property
    def num_params(self) -> int:
        """Number of kernel hyperparameters (excludes the noise term)."""
        return len(_PARAM_NAMES[self.family])

    @property
    def param_names(self) -> tuple[str, ...]:
        return _PARAM_NAMES[self.family]

    @property
    def log_params(self) -> np.ndarray:
        """Hyperparameters as a log-space vector, in ``param_names`` order."""
        values = [self.signal_std, self.length_scale]
        if self.family == "rq":
            values.append(self.shape_alpha)
        return np.log(values)

    @classmethod
    def from_log_params(cls, family: str, log_params) -> "Kernel":
        log_params = np.asarray(log_params, dtype=float)
        expected = len(_PARAM_NAMES.get(family, ()))
        if family not in FAMILIES:
            raise InputError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")
        if log_params.shape != (expected,):
            raise InputError(
                f"{family} kernel expects {expected} log-parameters, got shape {log_params.shape}"
            )
        values = np.exp(log_params)
        alpha = float(values[2]) if family == "rq" else None
        return cls(family, float(values[0]), float(values[1]), alpha)

    # -- evaluation ------------------------------------------------------

    def _from_distance(self, r: np.ndarray) -> np.ndarray:
        sf2 = self.signal_std**2
        ell = self.length_scale
        if self.family == "se":
            return sf2 * np.exp(-0.5 * (r / ell) ** 2)
        if self.family == "exp":
            return sf2 * np.exp(-r / ell)
        if self.family == "matern52":
            s = _SQRT5 * r / ell
            return sf2 * (1.0 + s + s * s / 3.0) * np.exp(-s)
        # rq
        bm1 = (r / ell) ** 2 / (2.0 * self.shape_alpha)
        return sf2 * np.exp(-self.shape_alpha * np.log1p(bm1))

    def cov(self, x, x2) -> float:
        """Covariance k(x, x2) between two input points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        x2 = np.atleast_1d(np.asarray(x2, dtype=float))
        if x.shape != x2.shape or x.ndim != 1:
            raise InputError(f"point dimension mismatch: {x.shape} vs {x2.shape}")
        r = float(np.linalg.norm(x - x2))
        return float(self._from_distance(np.asarray(r)))

    def matrix(self, X, X2=None) -> np.ndarray:
        """Covariance matrix between the rows of X and X2 (X2 defaults to X)."""
        return self._from_distance(pairwise_distances(X, X2))

    def grad_matrices(self, X) -> list[np.ndarray]:
        """Derivatives of ``matrix(X, X)`` w.r.t. each log-hyperparameter.

        Returned in ``param_names`` order; every matrix is symmetric.
        The amplitude entry is 2K for all families since K scales with
        signal_std^2.
        """
        r = pairwise_distances(X)
        K = self._from_distance(r)
        sf2 = self.signal_std**2
        ell = self.length_scale
        grads = [2.0 * K]
        if self.family == "se":
            grads.append(K * (r / ell) ** 2)
        elif self.family == "exp":
            grads.append(K * (r / ell))
        elif self.family == "matern52":
            s = _SQRT5 * r / ell
            grads.append(sf2 * np.exp(-s) * s * s * (1.0 + s) / 3.0)
        else:  # rq
            alpha = self.shape_alpha
            bm1 = (r / ell) ** 2 / (2.0 * alpha)
            b_pow = np.exp(-(alpha + 1.0) * np.log1p(bm1))
            grads.append(sf2 * b_pow * (r / ell) ** 2)
            grads.append(K * alpha * (bm1 / (1.0 + bm1) - np.log1p(bm1)))
        return grads
