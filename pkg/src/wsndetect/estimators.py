"""Closed-form local and global maximum-likelihood estimates for the Gaussian model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GaussianMeanModel, as_data, draw_samples


class DegenerateDataError(ValueError):
    """Sample variance or covariance is singular."""


@dataclass(frozen=True, eq=False)
class LocalEstimates:
    means: np.ndarray
    variances: np.ndarray | None = None


def local_mle(obs, cov_known: bool) -> LocalEstimates:
    """Per-node MLE from that node's own row: the sample mean, plus the
    divisor-L sample variance when the covariance is unknown."""
    z = as_data(obs)
    L = z.shape[-1]
    means = z.mean(axis=-1)
    if cov_known:
        return LocalEstimates(means)
    if L < 2:
        raise ValueError("variance estimation needs at least 2 slots")
    variances = ((z - means[..., None]) ** 2).mean(axis=-1)
    if np.any(variances <= 0):
        raise DegenerateDataError("zero sample variance at some node")
    return LocalEstimates(means, variances)


def sample_covariance(z: np.ndarray, center: np.ndarray) -> np.ndarray:
    """``(1/L) sum_l (z_l - center)(z_l - center)^T``, batched over leading axes."""
    r = z - center[..., :, None]
    return r @ np.swapaxes(r, -1, -2) / z.shape[-1]


def global_mle(obs, model: GaussianMeanModel):
    """Joint MLE of the mean, and of the full covariance when it is not known."""
    z = as_data(obs)
    N, L = z.shape[-2:]
    mean = z.mean(axis=-1)
    if model.cov_known:
        return mean, None
    if L < N + 1:
        raise ValueError(f"need L >= N+1 = {N + 1} slots to estimate a full covariance, got {L}")
    cov = sample_covariance(z, mean)
    if np.any(np.linalg.eigvalsh(cov)[..., 0] <= 0):
        raise DegenerateDataError("sample covariance is singular")
    return mean, cov


def empirical_estimator_covariance(
    model: GaussianMeanModel, hypothesis, L: int, n_trials: int, seed: int, chunk: int = 4096
) -> np.ndarray:
    """Empirical covariance of the local mean estimates over independent trials."""
    if n_trials < 100:
        raise ValueError("need at least 100 trials")
    N = model.n_sensors
    ss = np.random.SeedSequence(seed)
    total = np.zeros(N)
    cross = np.zeros((N, N))
    done = 0
    for child in ss.spawn(-(-n_trials // chunk)):
        m = min(chunk, n_trials - done)
        z = draw_samples(model, hypothesis, L, np.random.default_rng(child), batch=(m,))
        est = local_mle(z, cov_known=True).means
        total += est.sum(axis=0)
        cross += est.T @ est
        done += m
    mean = total / n_trials
    return (cross - n_trials * np.outer(mean, mean)) / (n_trials - 1)
