"""Box-constrained Gaussian curve fitting by damped Gauss-Newton.

Fits f(x) = A * exp(-(x - mu)^2 / (2 sigma^2)) to a handful of points by
Levenberg-Marquardt iteration with an active-set treatment of the box
bounds and a small multi-start grid. The peak height is bounded above by
the top of the threshold-index scale: the measurable thresholds live in
[0, 4], and without that cap the fit is degenerate along a ridge
(A -> inf, sigma -> 0) whenever only two bands carry non-clamped
thresholds, which is exactly the narrow-channel regime of interest.
"""

from dataclasses import dataclass

import numpy as np

from bandmask.errors import FitError

A_MAX_DEFAULT = 4.0
BOUNDS_MU = (-2.0, 8.0)
BOUNDS_SIGMA = (0.05, 10.0)


def gaussian(x, a, mu, sigma):
    return a * np.exp(-((x - mu) ** 2) / (2.0 * sigma**2))


def _jacobian(x, a, mu, sigma):
    z = (x - mu) / sigma
    e = np.exp(-0.5 * z**2)
    j = np.empty((x.size, 3))
    j[:, 0] = e
    j[:, 1] = a * e * z / sigma
    j[:, 2] = a * e * z**2 / sigma
    return j


@dataclass
class GaussFitResult:
    a: float
    mu: float
    sigma: float
    se_a: float
    se_mu: float
    se_sigma: float
    rss: float
    n_points: int
    iterations: int
    converged: bool

    @property
    def params(self):
        return np.array([self.a, self.mu, self.sigma])

    @property
    def standard_errors(self):
        return np.array([self.se_a, self.se_mu, self.se_sigma])


def _lm(x, y, p0, lo, hi, max_iter=300):
    p = np.clip(np.asarray(p0, dtype=float), lo, hi)
    r = gaussian(x, *p) - y
    rss = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = _jacobian(x, *p)
        g = jac.T @ r
        if np.abs(g).max() < 1e-13:
            converged = True
            break
        hess = jac.T @ jac
        # freeze coordinates pinned at a bound with the gradient pointing out
        active = ((p <= lo + 1e-12) & (g > 0)) | ((p >= hi - 1e-12) & (g < 0))
        free = ~active
        if not free.any():
            converged = True
            break
        accepted = False
        for _ in range(40):
            hf = hess[np.ix_(free, free)]
            damped = hf + lam * np.diag(np.diag(hf)) + 1e-14 * np.eye(int(free.sum()))
            try:
                step_f = np.linalg.solve(damped, -g[free])
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            q = p.copy()
            q[free] += step_f
            q = np.clip(q, lo, hi)
            rq = gaussian(x, *q) - y
            rssq = float(rq @ rq)
            if rssq <= rss:
                moved = float(np.abs(q - p).max())
                improvement = rss - rssq
                p, r, rss = q, rq, rssq
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if moved < 1e-12 or improvement < 1e-15 * (rss + 1e-15):
                    converged = True
                break
            lam *= 10.0
            if lam > 1e14:
                break
        if not accepted or converged:
            converged = converged or not accepted and np.abs(g[free]).max() < 1e-8
            break
    return p, rss, it, converged


def _standard_errors(x, y, p):
    n = x.size
    jac = _jacobian(x, *p)
    r = gaussian(x, *p) - y
    rss = float(r @ r)
    dof = max(n - 3, 1)
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj) * (rss / dof)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj) * (rss / dof)
    d = np.diag(cov).copy()
    d[d < 0] = 0.0
    return np.sqrt(d)


def fit_gaussian(x, y, a_max=A_MAX_DEFAULT, sigma0_grid=(0.5, 1.0, 2.0), max_iter=300):
    """Multi-start bounded LM fit; returns the lowest-RSS solution.

    Starts at mu0 = argmax point with A0 = max(y) and A0 = a_max, crossed
    with the sigma0 grid. Raises FitError (carrying the best point seen)
    only if no start produces a finite converged solution.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise FitError(f"need at least 3 points to fit, got {x.size}")
    lo = np.array([0.0, BOUNDS_MU[0], BOUNDS_SIGMA[0]])
    hi = np.array([a_max, BOUNDS_MU[1], BOUNDS_SIGMA[1]])
    mu0 = float(x[int(np.argmax(y))])
    a0s = [max(float(np.max(y)), 1e-3), float(a_max)]
    best = None
    total_iters = 0
    any_converged = False
    for a0 in a0s:
        for s0 in sigma0_grid:
            p, rss, iters, ok = _lm(x, y, (a0, mu0, s0), lo, hi, max_iter)
            total_iters += iters
            any_converged = any_converged or ok
            if best is None or rss < best[1] - 1e-15:
                best = (p, rss, ok)
    p, rss, ok = best
    if not np.isfinite(rss):
        raise FitError("gaussian fit diverged", best_params=p, best_rss=rss)
    if not any_converged:
        raise FitError(
            f"gaussian fit did not converge in {max_iter} iterations",
            best_params=p,
            best_rss=rss,
        )
    se = _standard_errors(x, y, p)
    return GaussFitResult(
        a=float(p[0]),
        mu=float(p[1]),
        sigma=float(p[2]),
        se_a=float(se[0]),
        se_mu=float(se[1]),
        se_sigma=float(se[2]),
        rss=rss,
        n_points=int(x.size),
        iterations=total_iters,
        converged=ok,
    )
