"""Large-sample laws of the test statistics and their tail probabilities.

Both statistics are asymptotically distributed as ``|n|^2`` with
``n ~ N(mu, Sigma)``.  Rotating into the eigenbasis of ``Sigma`` gives
``Q = offset + sum_i lam_i (g_i + delta_i)^2`` with iid standard normal
``g_i``, whose cumulant generating function is closed form; tail
probabilities come from the Lugannani-Rice saddlepoint formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import linalg
from scipy.optimize import brentq
from scipy.special import ndtr

from .detectors import StatisticKind
from .model import GaussianMeanModel

EIG_DROP_RTOL = 1e-12
# |s| * lam_max windows around the mean where 1/w and 1/u nearly cancel
PRECISE_WINDOW = 1e-2
SERIES_WINDOW = 1e-12
MAX_SADDLE_ITER = 200

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class SaddlepointError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class QuadFormDistribution:
    """Law of ``|n|^2`` for ``n ~ N(mu, sigma)``.

    ``eigvals`` (descending) and ``delta`` describe the retained directions:
    ``delta_i`` is the mean component along eigenvector ``i`` divided by
    ``sqrt(eigvals[i])``.  Mean mass along dropped null directions is
    collected in ``offset``.
    """

    mu: np.ndarray
    sigma: np.ndarray
    eigvals: np.ndarray
    delta: np.ndarray
    offset: float = 0.0

    @classmethod
    def from_moments(cls, mu, sigma) -> "QuadFormDistribution":
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        sigma = 0.5 * (sigma + sigma.T)
        lam, U = linalg.eigh(sigma)
        lam, U = lam[::-1], U[:, ::-1]
        if lam[0] <= 0:
            raise ValueError("covariance has no positive eigenvalue")
        if lam[-1] < -1e-9 * lam[0]:
            raise ValueError("covariance is not positive semidefinite")
        rotated = U.T @ mu
        keep = lam > EIG_DROP_RTOL * lam[0]
        offset = float(np.sum(rotated[~keep] ** 2))
        lam = lam[keep]
        delta = rotated[keep] / np.sqrt(lam)
        return cls(mu, sigma, lam, delta, offset)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def mean(self) -> float:
        return float(self.offset + np.sum(self.eigvals * (1.0 + self.delta**2)))

    def variance(self) -> float:
        lam2 = self.eigvals**2
        return float(np.sum(2.0 * lam2 + 4.0 * lam2 * self.delta**2))

    def cumulant(self, order: int) -> float:
        """``K^(r)(0) = 2^(r-1) (r-1)! sum lam^r (1 + r delta^2)`` (plus offset for r=1)."""
        r = order
        value = 2.0 ** (r - 1) * math.factorial(r - 1) * np.sum(self.eigvals**r * (1.0 + r * self.delta**2))
        return float(value + (self.offset if r == 1 else 0.0))

    def sample(self, size: int, rng) -> np.ndarray:
        g = rng.standard_normal((size, self.eigvals.shape[0]))
        return self.offset + np.sum(self.eigvals * (g + self.delta) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class AsymptoticSpec:
    dist_h0: QuadFormDistribution
    dist_h1: QuadFormDistribution
    kind: StatisticKind


# -- Fisher information pieces ------------------------------------------------


def marginal_fisher_tilde(cov):
    """Cross-information of the marginal scores, ``diag(C)^-1 C diag(C)^-1``, and its diagonal ``D``."""
    cov = np.asarray(cov, dtype=float)
    v = np.diag(cov)
    if np.any(v <= 0):
        raise ValueError("covariance diagonal must be positive")
    i_tilde = cov / np.outer(v, v)
    return i_tilde, np.diag(1.0 / v)


def local_mle_asymptotic_cov(i_tilde, D, L: int) -> np.ndarray:
    """``(1/L) D^-1 i_tilde D^-1`` for block-diagonal ``D``."""
    D = np.asarray(D, dtype=float)
    try:
        Dinv_i = linalg.solve(D, np.asarray(i_tilde, dtype=float), assume_a="sym")
        return linalg.solve(D, Dinv_i.T, assume_a="sym").T / L
    except (linalg.LinAlgError, ValueError) as exc:
        raise ValueError("D is singular") from exc


def _shift(model: GaussianMeanModel) -> np.ndarray:
    return model.theta1 - model.theta0


def lmp_asymptotic_spec(model: GaussianMeanModel, L: int) -> AsymptoticSpec:
    """Same law whether or not the covariance is known: the variance nuisance
    parameters are information-orthogonal to the means."""
    i_tilde, D = marginal_fisher_tilde(model.cov)
    d_sqrt = np.sqrt(np.diag(D))
    # D^-1/2 i_tilde D^-1/2 collapses to the correlation matrix of C
    sigma = i_tilde / np.outer(d_sqrt, d_sqrt)
    mu1 = math.sqrt(L) * d_sqrt * _shift(model)
    kind = StatisticKind.for_model("LMP", model.cov_known)
    return AsymptoticSpec(
        QuadFormDistribution.from_moments(np.zeros(model.n_sensors), sigma),
        QuadFormDistribution.from_moments(mu1, sigma),
        kind,
    )


def glr_asymptotic_spec(model: GaussianMeanModel, L: int) -> AsymptoticSpec:
    """Central / noncentral chi-square with N degrees of freedom."""
    N = model.n_sensors
    mu1 = math.sqrt(L) * linalg.solve_triangular(model.chol, _shift(model), lower=True)
    eye = np.eye(N)
    kind = StatisticKind.for_model("GLR", model.cov_known)
    return AsymptoticSpec(
        QuadFormDistribution.from_moments(np.zeros(N), eye),
        QuadFormDistribution.from_moments(mu1, eye),
        kind,
    )


def asymptotic_spec(kind: StatisticKind, model: GaussianMeanModel, L: int) -> AsymptoticSpec:
    if StatisticKind(kind).is_glr:
        return glr_asymptotic_spec(model, L)
    return lmp_asymptotic_spec(model, L)


# -- saddlepoint machinery ------------------------------------------------------


def quad_form_cgf(dist: QuadFormDistribution, s: float):
    """``K(s), K'(s), K''(s)`` of the non-offset part ``sum lam_i (g_i + delta_i)^2``."""
    lam, d2 = dist.eigvals, dist.delta**2
    if not s < 0.5 / lam[0]:
        raise ValueError(f"s={s} outside the domain s < {0.5 / lam[0]}")
    a = 2.0 * s * lam
    r = 1.0 / (1.0 - a)
    K = float(np.sum(-0.5 * np.log1p(-a) + 0.5 * a * d2 * r))
    K1 = float(np.sum(lam * r + lam * d2 * r * r))
    K2 = float(np.sum(2.0 * lam**2 * r * r + 4.0 * lam**2 * d2 * r**3))
    return K, K1, K2


def _legendre_gap(dist: QuadFormDistribution, s: float) -> float:
    """``s K'(s) - K(s)`` summed term by term without catastrophic cancellation."""
    lam, d2 = dist.eigvals, dist.delta**2
    a = 2.0 * s * lam
    r = 1.0 / (1.0 - a)
    # per term: (a/(1-a) + log(1-a))/2, which is a^2/4 + ... for small a
    small = np.abs(a) < 0.1
    head = np.empty_like(a)
    big = ~small
    head[big] = 0.5 * (a[big] * r[big] + np.log1p(-a[big]))
    a_s = a[small]
    series = np.zeros_like(a_s)
    power = a_s * a_s
    for n in range(2, 40):
        series += power * (n - 1) / n
        power = power * a_s
    head[small] = 0.5 * series
    return float(np.sum(head + 0.5 * a * a * d2 * r * r))


def solve_saddlepoint(dist: QuadFormDistribution, x: float) -> float:
    """Root of ``K'(s) = x`` on ``(-inf, 1/(2 lam_max))`` by bracketed Newton."""
    if x <= 0:
        raise ValueError("saddlepoint target must be positive")
    lam_max = dist.eigvals[0]
    hi = 0.5 / lam_max
    lo = -0.5 / lam_max
    # K' -> 0 as s -> -inf, so widening left always brackets a positive target
    for _ in range(2000):
        if quad_form_cgf(dist, lo)[1] < x:
            break
        lo *= 2.0
    else:
        raise SaddlepointError(f"could not bracket saddlepoint for x={x}")
    s = 0.0
    tol = 1e-12 * max(1.0, x)
    for _ in range(MAX_SADDLE_ITER):
        _, K1, K2 = quad_form_cgf(dist, s)
        f = K1 - x
        if abs(f) <= tol:
            return s
        if f > 0:
            hi = s
        else:
            lo = s
        step = s - f / K2
        s = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
            break
    _, K1, _ = quad_form_cgf(dist, s)
    if abs(K1 - x) <= 1e-10 * max(1.0, x):
        return s
    raise SaddlepointError(f"saddlepoint iteration did not converge for x={x}")


def _cgf_derivatives(lam, d2, s, upto: int):
    """``K^(r)(s)`` for ``r = 1..upto``; works for floats and mpmath numbers alike."""
    out = []
    for r in range(1, upto + 1):
        fact = math.factorial(r - 1)
        total = 0
        for li, di in zip(lam, d2):
            q = 1 / (1 - 2 * s * li)
            total += 2 ** (r - 1) * li**r * (fact * q**r + r * fact * di * q ** (r + 1))
        out.append(total)
    return out


def _correction_terms(w, u, K2, K3, K4, order: int):
    """``1/w - 1/u`` minus, for ``order=2``, Daniels' second-order term."""
    value = 1 / w - 1 / u
    if order == 2:
        k3 = K3 / K2**1.5
        k4 = K4 / K2**2
        value -= (k4 / 8 - 5 * k3**2 / 24) / u - 1 / u**3 - k3 / (2 * u**2) + 1 / w**3
    return value


def _correction_limit(dist: QuadFormDistribution, s: float, order: int) -> float:
    """Removable-singularity value at ``s -> 0`` plus its first-order slope."""
    k2, k3, k4, k5, k6 = (dist.cumulant(r) for r in range(2, 7))
    if order == 1:
        c0 = k3 / (6 * k2**1.5)
        c1 = (3 * k2 * k4 - 5 * k3**2) / (24 * k2**2.5)
    else:
        c0 = (360 * k2**3 * k3 - 54 * k2**2 * k5 + 225 * k2 * k3 * k4 - 175 * k3**3) / (
            2160 * k2**4.5
        )
        c1 = (
            144 * k2**4 * k4
            - 24 * k2**3 * (10 * k3**2 + k6)
            + 21 * k2**2 * (8 * k3 * k5 + 5 * k4**2)
            - 630 * k2 * k3**2 * k4
            + 385 * k3**4
        ) / (1152 * k2**5.5)
    return c0 + c1 * s


def _correction_precise(dist: QuadFormDistribution, s: float, order: int) -> float:
    with mpmath.workdps(60):
        lam = [mpmath.mpf(float(v)) for v in dist.eigvals]
        d2 = [mpmath.mpf(float(v)) ** 2 for v in dist.delta]
        sm = mpmath.mpf(s)
        K = mpmath.fsum(-mpmath.log1p(-2 * sm * li) / 2 + sm * li * di / (1 - 2 * sm * li) for li, di in zip(lam, d2))
        K1, K2, K3, K4 = _cgf_derivatives(lam, d2, sm, 4)
        w = mpmath.sign(sm) * mpmath.sqrt(2 * (sm * K1 - K))
        u = sm * mpmath.sqrt(K2)
        return float(_correction_terms(w, u, K2, K3, K4, order))


def saddlepoint_ccdf(dist: QuadFormDistribution, x: float, order: int = 2) -> float:
    """Lugannani-Rice approximation of ``P(Q > x)``.

    ``order=1`` is the classical formula ``1 - Phi(w) - phi(w) (1/w - 1/u)``;
    ``order=2`` (default) adds Daniels' second-order term, which cuts the
    error for the sums of unequal chi-square terms met here by roughly 5x.
    Close to the mean the correction is a 0/0 limit, so it is evaluated in
    extended precision and, at the mean itself, from its cumulant expansion.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    y = float(x) - dist.offset
    if y <= 0:
        return 1.0
    s = solve_saddlepoint(dist, y)
    w = math.copysign(math.sqrt(max(2.0 * _legendre_gap(dist, s), 0.0)), s)
    scaled = abs(s) * dist.eigvals[0]
    if scaled < SERIES_WINDOW:
        correction = _correction_limit(dist, s, order)
    elif scaled < PRECISE_WINDOW:
        correction = _correction_precise(dist, s, order)
    else:
        K1, K2, K3, K4 = _cgf_derivatives(dist.eigvals, dist.delta**2, s, 4)
        correction = _correction_terms(w, s * math.sqrt(K2), K2, K3, K4, order)
    phi = _INV_SQRT_2PI * math.exp(-0.5 * w * w)
    p = ndtr(-w) - phi * correction
    return min(max(float(p), 0.0), 1.0)


def saddlepoint_quantile(dist: QuadFormDistribution, p: float) -> float:
    """Threshold ``x`` with ``saddlepoint_ccdf(dist, x) == p``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    lo = dist.offset + 1e-12 * max(dist.mean(), 1.0)
    hi = dist.mean() + 10.0 * math.sqrt(dist.variance())
    while saddlepoint_ccdf(dist, hi) > p:
        hi *= 2.0
    if saddlepoint_ccdf(dist, lo) < p:
        return lo
    return brentq(lambda t: saddlepoint_ccdf(dist, t) - p, lo, hi, xtol=1e-12, rtol=1e-12)


# -- performance summaries ------------------------------------------------------


def croc_theoretical(spec: AsymptoticSpec, gammas, order: int = 2) -> np.ndarray:
    """``(P_FA, P_MD)`` rows along an ascending threshold grid."""
    gammas = np.asarray(gammas, dtype=float)
    if np.any(np.diff(gammas) < 0):
        raise ValueError("gammas must be sorted ascending")
    pfa = np.array([saddlepoint_ccdf(spec.dist_h0, g, order) for g in gammas])
    pmd = np.array([1.0 - saddlepoint_ccdf(spec.dist_h1, g, order) for g in gammas])
    # enforce the monotonicity a CDF has; the approximation is monotone up to rounding
    pfa = np.clip(np.minimum.accumulate(pfa), 0.0, 1.0)
    pmd = np.clip(np.maximum.accumulate(pmd), 0.0, 1.0)
    return np.column_stack([pfa, pmd])


def deflection_glr(model: GaussianMeanModel, L: int) -> float:
    d = _shift(model)
    y = linalg.solve_triangular(model.chol, d, lower=True)
    return float((L * np.sum(y * y)) ** 2 / (2.0 * model.n_sensors))


def deflection_lmp(model: GaussianMeanModel, L: int) -> float:
    d = _shift(model)
    v = np.diag(model.cov)
    normalized = model.cov / v[None, :]
    return float((L * np.sum(d * d / v)) ** 2 / (2.0 * np.trace(normalized @ normalized)))
