"""Gaussian mean-shift test with spatially correlated sensors.

Observations are stored sensor-major: ``data[k, l]`` is the sample taken by
sensor ``k`` in time slot ``l``.  All random draws go through numpy's PCG64
bit generator (``numpy.random.default_rng``) so a seed fully determines the
output on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import linalg


class Hypothesis(str, Enum):
    H0 = "H0"
    H1 = "H1"


class CovarianceError(ValueError):
    """Covariance matrix is not symmetric positive definite."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def build_toeplitz_cov(rho: float, n: int) -> np.ndarray:
    """Symmetric Toeplitz covariance with first row ``[1, rho, ..., rho**(n-1)]``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    # 0**0 == 1 in numpy, so rho = 0 gives the identity
    return np.power(float(rho), lags)


def check_covariance(cov, rtol: float = 1e-12) -> np.ndarray:
    """Validate symmetry and positive definiteness; return the lower Cholesky factor."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise CovarianceError(f"covariance must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise CovarianceError("covariance has non-finite entries")
    scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
    if np.max(np.abs(cov - cov.T)) > rtol * scale:
        raise CovarianceError("covariance is not symmetric")
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise CovarianceError("covariance is not positive definite") from exc


@dataclass(frozen=True, eq=False)
class NullParameters:
    """What a detector is allowed to know: the null mean and the covariance.

    The true alternative mean never reaches detector code; it is only held by
    :class:`GaussianMeanModel` for simulation and asymptotic predictions.
    """

    theta0: np.ndarray
    cov: np.ndarray
    cov_known: bool = True

    @property
    def n_sensors(self) -> int:
        return self.theta0.shape[0]

    @cached_property
    def variances(self) -> np.ndarray:
        return _frozen(np.diag(self.cov))


@dataclass(frozen=True, eq=False)
class GaussianMeanModel:
    """Test ``z_l ~ N(theta0, C)`` against ``z_l ~ N(theta1, C)``, iid over slots."""

    theta0: np.ndarray
    theta1: np.ndarray
    cov: np.ndarray
    cov_known: bool = True

    def __post_init__(self):
        theta0 = _frozen(self.theta0)
        theta1 = _frozen(self.theta1)
        cov = _frozen(self.cov)
        n = cov.shape[0] if cov.ndim == 2 else -1
        if theta0.ndim != 1 or theta1.ndim != 1 or theta0.shape != theta1.shape:
            raise ValueError("theta0 and theta1 must be vectors of equal length")
        if n != theta0.shape[0]:
            raise ValueError(
                f"covariance shape {cov.shape} does not match {theta0.shape[0]} sensors"
            )
        chol = check_covariance(cov)
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "theta1", theta1)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "cov_known", bool(self.cov_known))
        object.__setattr__(self, "_chol", _frozen(chol))

    @classmethod
    def toeplitz(cls, theta1, rho: float, cov_known: bool = True, theta0=None):
        theta1 = np.asarray(theta1, dtype=float)
        n = theta1.shape[0]
        theta0 = np.zeros(n) if theta0 is None else theta0
        return cls(theta0, theta1, build_toeplitz_cov(rho, n), cov_known)

    @property
    def n_sensors(self) -> int:
        return self.theta0.shape[0]

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor ``G`` with ``G @ G.T == cov``."""
        return self._chol

    @property
    def null(self) -> NullParameters:
        return NullParameters(self.theta0, self.cov, self.cov_known)

    def mean(self, hypothesis: Hypothesis | str) -> np.ndarray:
        return self.theta1 if Hypothesis(hypothesis) is Hypothesis.H1 else self.theta0


@dataclass(frozen=True, eq=False)
class ObservationBlock:
    """N x L matrix of samples, one column per time slot."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[1] < 1 or data.shape[0] < 1:
            raise ValueError(f"observations must be a non-empty N x L matrix, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("observations contain non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def n_sensors(self) -> int:
        return self.data.shape[0]

    @property
    def n_slots(self) -> int:
        return self.data.shape[1]


def as_data(obs) -> np.ndarray:
    """Raw sample array from an :class:`ObservationBlock` or array-like."""
    if isinstance(obs, ObservationBlock):
        return obs.data
    return np.asarray(obs, dtype=float)


def draw_samples(model: GaussianMeanModel, hypothesis, n_slots: int, rng, batch=()):
    """Draw ``batch + (N, L)`` samples as ``theta + G @ u`` with ``u`` standard normal."""
    if n_slots < 1:
        raise ValueError(f"L must be >= 1, got {n_slots}")
    u = rng.standard_normal(tuple(batch) + (model.n_sensors, n_slots))
    return model.mean(hypothesis)[:, None] + model.chol @ u


def sample_observations(
    model: GaussianMeanModel, hypothesis, n_slots: int, seed: int
) -> ObservationBlock:
    rng = np.random.default_rng(seed)
    return ObservationBlock(draw_samples(model, hypothesis, n_slots, rng))


def local_parameter_dim(model: GaussianMeanModel) -> int:
    """Number of locally observable parameters: a mean per node, plus a variance if C is unknown."""
    return model.n_sensors if model.cov_known else 2 * model.n_sensors
