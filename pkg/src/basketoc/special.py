"""Beta, binomial and beta-binomial kernels plus the Jensen-Shannon
divergence between two beta densities.

All functions accept numpy arrays and broadcast their arguments.
"""

from functools import lru_cache

import numpy as np
from scipy.special import betainc, betaincc, betaln, gammaln, xlog1py, xlogy

LN2 = np.log(2.0)


class QuadratureError(ArithmeticError):
    """The JSD quadrature did not reach the requested accuracy."""


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if np.any(np.asarray(value) <= 0):
            raise ValueError(f"{name} must be positive")


def log_beta_fn(a, b):
    """Natural log of the beta function B(a, b)."""
    _check_positive(a=a, b=b)
    return betaln(a, b)


def log_binom_coef(n, r):
    return gammaln(np.add(n, 1)) - gammaln(np.add(r, 1)) - gammaln(np.subtract(n, r) + 1)


def binom_pmf(n, r, p):
    """Binomial probability mass, evaluated in log space (0**0 == 1)."""
    n, r, p = np.asarray(n), np.asarray(r), np.asarray(p, dtype=float)
    if np.any(r < 0) or np.any(r > n):
        raise ValueError("need 0 <= r <= n")
    logp = log_binom_coef(n, r) + xlogy(r, p) + xlog1py(n - r, -p)
    return np.exp(logp)


def beta_tail(alpha, beta, p0):
    """P(X > p0) for X ~ Beta(alpha, beta)."""
    _check_positive(alpha=alpha, beta=beta)
    return betaincc(alpha, beta, p0)


def beta_cdf(alpha, beta, x):
    """Regularized lower incomplete beta I_x(alpha, beta)."""
    _check_positive(alpha=alpha, beta=beta)
    return betainc(alpha, beta, x)


def beta_binom_pmf(m, x, alpha, beta):
    """Beta-binomial mass C(m, x) B(alpha + x, beta + m - x) / B(alpha, beta)."""
    m, x = np.asarray(m), np.asarray(x)
    if np.any(x < 0) or np.any(x > m):
        raise ValueError("need 0 <= x <= m")
    _check_positive(alpha=alpha, beta=beta)
    logp = log_binom_coef(m, x) + betaln(alpha + x, beta + m - x) - betaln(alpha, beta)
    return np.exp(logp)


def beta_binom_sf(m, c, alpha, beta):
    """P(X >= c) for X ~ BetaBinomial(m, alpha, beta); c may exceed m."""
    alpha, beta, c = np.broadcast_arrays(
        np.asarray(alpha, float), np.asarray(beta, float), np.asarray(c)
    )
    x = np.arange(m + 1)
    pmf = beta_binom_pmf(m, x, alpha[..., None], beta[..., None])
    return np.where(x >= c[..., None], pmf, 0.0).sum(axis=-1)


# --- Jensen-Shannon divergence -------------------------------------------

# Endpoint segments [0, EDGE] and [1 - EDGE, 1] use x = EDGE * u**m so that
# x**(shape - 1) singularities and x*log(x) terms become smooth in u.  The
# interior is cut at each density's mean and mean +- 4 sd.
_EDGE = 0.05
_FINE = (2, 32)
_COARSE = (2, 24)


@lru_cache(maxsize=None)
def _panel_rule(panels, order):
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _jsd_integrand(logx, log1mx, a1, b1, a2, b2):
    lp = (a1 - 1) * logx + (b1 - 1) * log1mx - betaln(a1, b1)
    lq = (a2 - 1) * logx + (b2 - 1) * log1mx - betaln(a2, b2)
    lm = np.logaddexp(lp, lq) - LN2
    return 0.5 * (np.exp(lp) * (lp - lm) + np.exp(lq) * (lq - lm))


def _jsd_raw(a1, b1, a2, b2, rule):
    u, wu = _panel_rule(*rule)
    a1, b1, a2, b2 = (v[..., None] for v in (a1, b1, a2, b2))
    total = 0.0

    # endpoint segments
    for left in (True, False):
        shape = np.minimum(a1, a2) if left else np.minimum(b1, b2)
        m = 3.0 / np.minimum(shape, 1.0)
        um = u ** m
        dist = _EDGE * um
        jac = _EDGE * m * um / u
        if left:
            logx, log1mx = np.log(dist), np.log1p(-dist)
        else:
            logx, log1mx = np.log1p(-dist), np.log(dist)
        f = _jsd_integrand(logx, log1mx, a1, b1, a2, b2)
        total = total + (f * jac * wu).sum(axis=-1)

    # interior segments
    cuts = []
    for a, b in ((a1, b1), (a2, b2)):
        mean = a / (a + b)
        sd = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
        cuts += [mean - 4 * sd, mean, mean + 4 * sd]
    cuts = np.sort(np.clip(np.concatenate(cuts, axis=-1), _EDGE, 1 - _EDGE), axis=-1)
    lo = np.full(cuts.shape[:-1] + (1,), _EDGE)
    hi = np.full(cuts.shape[:-1] + (1,), 1 - _EDGE)
    edges = np.concatenate([lo, cuts, hi], axis=-1)
    for j in range(edges.shape[-1] - 1):
        x0, x1 = edges[..., j : j + 1], edges[..., j + 1 : j + 2]
        x = x0 + (x1 - x0) * u
        f = _jsd_integrand(np.log(x), np.log1p(-x), a1, b1, a2, b2)
        total = total + (f * (x1 - x0) * wu).sum(axis=-1)
    return total / LN2


def jsd_beta(a1, b1, a2, b2, tol=1e-8):
    """Jensen-Shannon divergence (base 2) between Beta(a1, b1) and Beta(a2, b2).

    Vectorised over broadcastable shape arrays; the result lies in [0, 1].
    A second, lower-order rule is evaluated alongside and a
    :class:`QuadratureError` is raised if the two disagree by more than
    ``tol``.
    """
    _check_positive(a1=a1, b1=b1, a2=a2, b2=b2)
    a1, b1, a2, b2 = np.broadcast_arrays(*(np.asarray(v, float) for v in (a1, b1, a2, b2)))
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        fine = _jsd_raw(a1, b1, a2, b2, _FINE)
        coarse = _jsd_raw(a1, b1, a2, b2, _COARSE)
    if not np.all(np.isfinite(fine)) or np.any(np.abs(fine - coarse) > tol):
        raise QuadratureError("JSD quadrature did not converge")
    same = (a1 == a2) & (b1 == b2)
    out = np.where(same, 0.0, np.clip(fine, 0.0, 1.0))
    return out if out.ndim else float(out)
