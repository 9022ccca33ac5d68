"""Independent reference computations used to check the package numerics."""
import math

import numpy as np
from scipy import optimize, stats
from scipy.integrate import quad
from scipy.special import gammaincc


def chi2_ccdf(x, dof):
    return gammaincc(dof / 2.0, np.asarray(x, dtype=float) / 2.0)


def two_term_ccdf(lam, delta, x):
    """``P(l1 (g1+d1)^2 + l2 (g2+d2)^2 > x)`` by one-dimensional integration over g1."""
    l1, l2 = lam
    d1, d2 = delta

    def sf2(rest):
        if rest <= 0:
            return 1.0
        return stats.ncx2.sf(rest / l2, 1, d2 * d2) if d2 else stats.chi2.sf(rest / l2, 1)

    vmax = math.sqrt(max(x, 0.0) / l1)
    inner, _ = quad(
        lambda v: (stats.norm.pdf(v - d1) + stats.norm.pdf(-v - d1)) * sf2(x - l1 * v * v),
        0.0, vmax, epsabs=1e-13, epsrel=1e-12, limit=500,
    )
    return inner + stats.norm.sf(vmax - d1) + stats.norm.cdf(-vmax - d1)


def mc_quadform_ccdf(mu, sigma, xs, n, seed):
    """Empirical ``P(|n|^2 > x)`` with ``n ~ N(mu, sigma)`` from direct sampling."""
    rng = np.random.default_rng(seed)
    G = np.linalg.cholesky(sigma)
    out = np.empty(0)
    for start in range(0, n, 200_000):
        m = min(200_000, n - start)
        v = mu + rng.standard_normal((m, len(mu))) @ G.T
        out = np.concatenate([out, np.sum(v * v, axis=1)])
    out.sort()
    return 1.0 - np.searchsorted(out, xs, side="right") / n


def gaussian_loglik(z, mean, cov):
    N, L = z.shape
    sign, logdet = np.linalg.slogdet(cov)
    r = z - mean[:, None]
    quad_form = np.sum(r * np.linalg.solve(cov, r))
    return -0.5 * (L * (N * math.log(2 * math.pi) + logdet) + quad_form)


def _cov_from_params(p, N):
    Lmat = np.zeros((N, N))
    Lmat[np.tril_indices(N)] = p
    Lmat[np.diag_indices(N)] = np.exp(np.diag(Lmat))
    return Lmat @ Lmat.T


def brute_force_unknown_cov_glr(z, theta0):
    """``2 log`` GLR by numerically maximizing the Gaussian likelihood under each hypothesis.

    The covariance is parametrized by a Cholesky factor with log diagonal; under
    H1 the mean is free as well.  Several starts guard against local optima.
    """
    N, L = z.shape
    ntri = N * (N + 1) // 2

    def start_params(center):
        S = (z - center[:, None]) @ (z - center[:, None]).T / L
        # deliberately perturbed start so the optimizer does the real work
        G = np.linalg.cholesky(S * 1.7 + 0.3 * np.eye(N))
        p = G[np.tril_indices(N)].copy()
        diag_pos = [i * (i + 1) // 2 + i for i in range(N)]
        p[diag_pos] = np.log(np.diag(G))
        return p

    def best(fun, x0s):
        res = [optimize.minimize(fun, x0, method="BFGS", options={"gtol": 1e-10, "maxiter": 5000}) for x0 in x0s]
        return min(r.fun for r in res)

    nll0 = lambda p: -gaussian_loglik(z, theta0, _cov_from_params(p, N))
    nll1 = lambda p: -gaussian_loglik(z, p[:N], _cov_from_params(p[N:], N))
    m0 = best(nll0, [start_params(theta0), np.zeros(ntri)])
    mbar = z.mean(axis=1)
    m1 = best(nll1, [np.concatenate([theta0, start_params(theta0)]),
                     np.concatenate([mbar + 0.1, np.zeros(ntri)])])
    return 2.0 * (m0 - m1)
