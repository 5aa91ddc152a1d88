"""Independent reference implementations used only by the tests.

Nothing here imports the package's numeric paths: weights are written out
from their formulas, tails come from ``scipy.stats.beta``/mpmath and the
trial is enumerated outcome by outcome with plain loops.
"""

import itertools
import math

import mpmath as mp
import numpy as np
from scipy import stats


def beta_tail_mp(a, b, x, dps=40):
    with mp.workdps(dps):
        a, b, x = mp.mpf(a), mp.mpf(b), mp.mpf(x)
        f = lambda t: t ** (a - 1) * (1 - t) ** (b - 1)
        mid = a / (a + b)
        pts = sorted({x, max(x, mid), mp.mpf(1)})
        return float(mp.quad(f, pts) / mp.beta(a, b))


def beta_binom_mp(m, x, a, b, dps=40):
    with mp.workdps(dps):
        return float(mp.binomial(m, x) * mp.beta(a + x, b + m - x) / mp.beta(a, b))


def jsd_mp(a1, b1, a2, b2, dps=40):
    """JSD (base 2) by tanh-sinh quadrature after a graded substitution at
    each endpoint of the two halves of (0, 1)."""
    with mp.workdps(dps):
        a1, b1, a2, b2 = map(mp.mpf, (a1, b1, a2, b2))
        lb1, lb2 = mp.log(mp.beta(a1, b1)), mp.log(mp.beta(a2, b2))

        def f(lx, l1x):
            lp = (a1 - 1) * lx + (b1 - 1) * l1x - lb1
            lq = (a2 - 1) * lx + (b2 - 1) * l1x - lb2
            lm = mp.log((mp.exp(lp) + mp.exp(lq)) / 2)
            return (mp.exp(lp) * (lp - lm) + mp.exp(lq) * (lq - lm)) / 2

        total = 0
        for left in (True, False):
            s = min(a1, a2) if left else min(b1, b2)
            m = 3 / min(s, 1)

            def g(u):
                if u == 0:
                    return mp.mpf(0)
                d = u**m / 2
                jac = m * u ** (m - 1) / 2
                if left:
                    return f(mp.log(d), mp.log1p(-d)) * jac
                return f(mp.log1p(-d), mp.log(d)) * jac

            pts = [mp.mpf(0), mp.mpf(1)]
            for a, b in ((a1, b1), (a2, b2)):
                mu = a / (a + b)
                dist = mu if left else 1 - mu
                if dist < mp.mpf(0.5):
                    pts.append((2 * dist) ** (1 / m))
            total += mp.quad(g, sorted(set(pts)))
        return float(total / mp.log(2))


def jsd_dense(a1, b1, a2, b2, nodes=10**6):
    """Composite midpoint rule with ``nodes`` points, for shapes >= 1."""
    x = (np.arange(nodes) + 0.5) / nodes
    p = stats.beta.pdf(x, a1, b1)
    q = stats.beta.pdf(x, a2, b2)
    m = (p + q) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(p > 0, p * np.log2(p / m), 0.0)
        tq = np.where(q > 0, q * np.log2(q / m), 0.0)
    return float(np.sum(tp + tq) / 2 / nodes)


# --- design semantics, written out from the formulas ---------------------


def cpp_formula(rk, nk, ri, ni, a, b):
    d = abs(rk / nk - ri / ni)
    if d == 0:
        return 1.0
    return 1.0 / (1.0 + math.exp(a + b * math.log(d * max(nk, ni) ** 0.25)))


def pair_weight(kind, params, s1, s2, nk, rk, ni, ri):
    if kind == "cpp":
        return cpp_formula(rk, nk, ri, ni, *params)
    if kind == "none":
        return 0.0
    eps, tau = params
    w = (1 - jsd_dense_cached(s1 + rk, s2 + nk - rk, s1 + ri, s2 + ni - ri)) ** eps
    return w if w > tau else 0.0


_jsd_cache = {}


def jsd_dense_cached(a1, b1, a2, b2):
    key = (a1, b1, a2, b2)
    if key not in _jsd_cache:
        if (a1, b1) == (a2, b2):
            _jsd_cache[key] = 0.0
        else:
            # mpmath is too slow for whole trial sweeps; the 2e5-node midpoint
            # rule is ~1e-10 accurate for the integer shapes used here
            _jsd_cache[key] = jsd_dense(a1, b1, a2, b2, nodes=200_000)
    return _jsd_cache[key]


def shared_shapes(kind, params, share_prior, s1, s2, n, r):
    k = len(r)
    out = []
    for j in range(k):
        A = B = 0.0
        for i in range(k):
            w = 1.0 if i == j else pair_weight(kind, params, s1, s2, n[j], r[j], n[i], r[i])
            if share_prior:
                A += w * (s1 + r[i])
                B += w * (s2 + n[i] - r[i])
            else:
                A += w * r[i]
                B += w * (n[i] - r[i])
        if not share_prior:
            A += s1
            B += s2
        out.append((A, B))
    return out


def tail(A, B, p0):
    return stats.beta.sf(p0, A, B)


def brute_force_oc(k, s1, s2, p0, n, n1, lam, kind, params, share_prior, p,
                   interim=None, fut=0.1, eff=0.9):
    """Plain-loop enumeration of every outcome vector of the trial.

    ``interim`` is None (single stage), "posterior" or "postpred"; the
    predictive probability uses the shared interim posterior for the
    future data and the basket's own posterior for the final check.
    """
    p = np.asarray(p, float)
    null = p <= p0
    rej = np.zeros(k)
    size = np.zeros(k)
    pm_sum = np.zeros(k)
    sq_sum = np.zeros(k)
    fwer = fwpower = mass = 0.0

    def binom(m, r, q):
        return math.comb(m, r) * q**r * (1 - q) ** (m - r)

    def finish(prob, nn, rr, decided):
        nonlocal fwer, fwpower, mass
        shapes = shared_shapes(kind, params, share_prior, s1, s2, nn, rr)
        flags = []
        for j, (A, B) in enumerate(shapes):
            flags.append(decided[j] if decided[j] is not None else tail(A, B, p0) >= lam)
            pm = A / (A + B)
            pm_sum[j] += prob * pm
            sq_sum[j] += prob * (pm - p[j]) ** 2
            size[j] += prob * nn[j]
            rej[j] += prob * flags[j]
        flags = np.array(flags)
        fwer += prob * flags[null].any()
        fwpower += prob * flags[~null].any()
        mass += prob

    if interim is None:
        for r in itertools.product(range(n + 1), repeat=k):
            prob = math.prod(binom(n, r[j], p[j]) for j in range(k))
            finish(prob, [n] * k, list(r), [None] * k)
    else:
        n2 = n - n1
        for r1 in itertools.product(range(n1 + 1), repeat=k):
            p1 = math.prod(binom(n1, r1[j], p[j]) for j in range(k))
            shapes = shared_shapes(kind, params, share_prior, s1, s2, [n1] * k, list(r1))
            decided = []
            for j, (A, B) in enumerate(shapes):
                if interim == "posterior":
                    stat = tail(A, B, p0)
                else:
                    stat = sum(
                        stats.betabinom.pmf(x, n2, A, B)
                        for x in range(n2 + 1)
                        if tail(s1 + r1[j] + x, s2 + n - r1[j] - x, p0) >= lam
                    )
                decided.append(False if stat < fut else True if stat > eff else None)
            cont = [j for j in range(k) if decided[j] is None]
            for xs in itertools.product(range(n2 + 1), repeat=len(cont)):
                nn, rr = [n1] * k, list(r1)
                prob = p1
                for j, x in zip(cont, xs):
                    nn[j] = n
                    rr[j] += x
                    prob *= binom(n2, x, p[j])
                finish(prob, nn, rr, decided)

    ecd = float(np.sum(1 - rej[null]) + np.sum(rej[~null]))
    return {
        "rejection_prob": rej, "fwer": fwer if null.any() else 0.0,
        "fwpower": fwpower if (~null).any() else 0.0, "ecd": ecd, "ess": size,
        "mean_posterior_mean": pm_sum, "mse": sq_sum, "mass": mass,
    }
