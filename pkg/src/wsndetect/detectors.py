"""Centralized GLR and marginal-product (L-MP) statistics.

Every statistic is reported as ``2 log T``.  The ``*_values`` functions work
on raw arrays of shape ``(..., N, L)`` and are what the Monte Carlo code
calls; the public per-block functions wrap them into :class:`StatisticValue`.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg

from .consensus import TransmissionLedger, spatial_sum
from .estimators import DegenerateDataError, sample_covariance
from .model import Hypothesis, NullParameters, as_data, check_covariance
from .network import SensorNetwork


class StatisticKind(str, Enum):
    GLR_KNOWN_C = "GLR_KNOWN_C"
    GLR_UNKNOWN_C = "GLR_UNKNOWN_C"
    LMP_KNOWN_C = "LMP_KNOWN_C"
    LMP_UNKNOWN_C = "LMP_UNKNOWN_C"

    @property
    def is_glr(self) -> bool:
        return self.name.startswith("GLR")

    @classmethod
    def for_model(cls, family: str, cov_known: bool) -> "StatisticKind":
        suffix = "KNOWN_C" if cov_known else "UNKNOWN_C"
        return cls(f"{family.upper()}_{suffix}")


@dataclass(frozen=True)
class StatisticValue:
    two_log_value: float
    kind: StatisticKind


def _centered_means(z, theta0):
    return z.mean(axis=-1) - np.asarray(theta0, dtype=float)


# -- known covariance ----------------------------------------------------------


def glr_known_cov_values(data, theta0, cov) -> np.ndarray:
    z = np.asarray(data, dtype=float)
    G = check_covariance(cov)
    d = _centered_means(z, theta0)
    # whiten with the Cholesky factor: d^T C^-1 d = |G^-1 d|^2
    y = linalg.solve_triangular(G, d.reshape(-1, G.shape[0]).T, lower=True)
    return z.shape[-1] * np.sum(y * y, axis=0).reshape(d.shape[:-1])


def lmp_known_cov_values(data, theta0, variances) -> np.ndarray:
    z = np.asarray(data, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if np.any(variances <= 0):
        raise ValueError("variances must be strictly positive")
    d = _centered_means(z, theta0)
    return z.shape[-1] * np.sum(d * d / variances, axis=-1)


def glr_known_cov(obs, theta0, cov) -> StatisticValue:
    """``L (mean - theta0)^T C^-1 (mean - theta0)``."""
    return StatisticValue(float(glr_known_cov_values(as_data(obs), theta0, cov)), StatisticKind.GLR_KNOWN_C)


def lmp_known_cov(obs, theta0, variances) -> StatisticValue:
    """``L sum_k (mean_k - theta0_k)^2 / C_kk``: the GLR with C replaced by its diagonal."""
    value = float(lmp_known_cov_values(as_data(obs), theta0, variances))
    return StatisticValue(value, StatisticKind.LMP_KNOWN_C)


# -- per-node terms -------------------------------------------------------------


def local_terms(data, theta0, variances=None) -> np.ndarray:
    """Per-node log marginal likelihood ratios ``T_k``; shape ``(..., N)``.

    With ``variances`` given the node variance is known; otherwise each node
    maximizes over its own variance under both hypotheses.
    """
    z = np.asarray(data, dtype=float)
    L = z.shape[-1]
    d = _centered_means(z, theta0)
    if variances is not None:
        variances = np.asarray(variances, dtype=float)
        if np.any(variances <= 0):
            raise ValueError("variances must be strictly positive")
        return L * d * d / (2.0 * variances)
    if L < 2:
        raise ValueError("unknown-variance terms need at least 2 slots")
    var1 = np.var(z, axis=-1)
    if np.any(var1 <= 0):
        raise DegenerateDataError("zero sample variance at some node")
    # var0 = var1 + d^2, so log(var0/var1) = log1p(d^2/var1)
    return 0.5 * L * np.log1p(d * d / var1)


def local_term(row, theta0_k: float, variance_k: float | None = None, cov_known: bool = True) -> float:
    """``T_k`` for a single node from its own ``L`` samples."""
    row = np.asarray(row, dtype=float)
    variances = None
    if cov_known:
        if variance_k is None:
            raise ValueError("known-covariance term needs the node variance")
        variances = [variance_k]
    return float(local_terms(row[None, :], [theta0_k], variances)[0])


def lmp_unknown_cov_values(data, theta0) -> np.ndarray:
    return 2.0 * local_terms(data, theta0).sum(axis=-1)


def lmp_unknown_cov(obs, theta0) -> StatisticValue:
    """``L sum_k log(1 + (mean_k - theta0_k)^2 / var_k)`` with divisor-L variances."""
    return StatisticValue(float(lmp_unknown_cov_values(as_data(obs), theta0)), StatisticKind.LMP_UNKNOWN_C)


# -- unknown covariance GLR -----------------------------------------------------


def glr_unknown_cov_values(data, theta0) -> np.ndarray:
    """Hotelling form ``L log(1 + d^T S1^-1 d)`` with ``S1`` the centred sample covariance."""
    z = np.asarray(data, dtype=float)
    N, L = z.shape[-2:]
    if L < N + 1:
        raise ValueError(f"need L >= N+1 = {N + 1} slots, got {L}")
    d = _centered_means(z, theta0)
    S1 = sample_covariance(z, z.mean(axis=-1))
    try:
        G = np.linalg.cholesky(S1)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDataError("sample covariance is singular") from exc
    y = np.linalg.solve(G, d[..., None])[..., 0]
    return L * np.log1p(np.sum(y * y, axis=-1))


def glr_unknown_cov_det(data, theta0) -> np.ndarray:
    """Determinant-ratio form ``L log(det S0 / det S1)``."""
    z = np.asarray(data, dtype=float)
    L = z.shape[-1]
    theta0 = np.broadcast_to(np.asarray(theta0, dtype=float), z.shape[:-1])
    sign0, logdet0 = np.linalg.slogdet(sample_covariance(z, theta0))
    sign1, logdet1 = np.linalg.slogdet(sample_covariance(z, z.mean(axis=-1)))
    if np.any(sign1 <= 0) or np.any(sign0 <= 0):
        raise DegenerateDataError("sample covariance is singular")
    return L * (logdet0 - logdet1)


def glr_unknown_cov(obs, theta0) -> StatisticValue:
    """Exact Gaussian GLR with mean and covariance maximized under each hypothesis."""
    return StatisticValue(float(glr_unknown_cov_values(as_data(obs), theta0)), StatisticKind.GLR_UNKNOWN_C)


# -- distributed L-MP -----------------------------------------------------------


def lmp_distributed_values(
    data, network: SensorNetwork, null: NullParameters, n_it: int,
    ledger: TransmissionLedger | None = None,
) -> np.ndarray:
    """Per-node ``2 * SpatialSum(T_k)``; shape ``(..., N)``."""
    variances = null.variances if null.cov_known else None
    terms = local_terms(data, null.theta0, variances)
    # consensus runs over the node axis, extra axes are independent runs
    node_major = np.moveaxis(terms, -1, 0)
    sums = spatial_sum(network.weights, node_major, n_it, ledger)
    return 2.0 * np.moveaxis(sums, 0, -1)


def lmp_distributed(
    obs, network: SensorNetwork, null: NullParameters, n_it: int,
    ledger: TransmissionLedger | None = None,
) -> list[StatisticValue]:
    """Algorithm run at every node: local term, then consensus on the sum."""
    z = as_data(obs)
    if z.shape[0] != network.n_nodes:
        raise ValueError(f"{z.shape[0]} sensor rows for a {network.n_nodes}-node network")
    kind = StatisticKind.for_model("LMP", null.cov_known)
    values = lmp_distributed_values(z, network, null, n_it, ledger)
    return [StatisticValue(float(v), kind) for v in values]


def centralized_statistic_values(kind: StatisticKind, data, null: NullParameters) -> np.ndarray:
    kind = StatisticKind(kind)
    if kind is StatisticKind.GLR_KNOWN_C:
        return glr_known_cov_values(data, null.theta0, null.cov)
    if kind is StatisticKind.LMP_KNOWN_C:
        return lmp_known_cov_values(data, null.theta0, null.variances)
    if kind is StatisticKind.GLR_UNKNOWN_C:
        return glr_unknown_cov_values(data, null.theta0)
    return lmp_unknown_cov_values(data, null.theta0)


def decide(statistic, gamma: float):
    """Threshold test; a statistic exactly at ``gamma`` is assigned to H1."""
    if np.ndim(statistic) == 0:
        return Hypothesis.H1 if statistic >= gamma else Hypothesis.H0
    return np.asarray(statistic) >= gamma
