"""Trial design, information-sharing weights and decision rules.

Two borrowing schemes are supported.  In the power prior scheme basket k
is analysed with

    Beta(s1 + sum_i w[k, i] * r_i,  s2 + sum_i w[k, i] * (n_i - r_i))

and in the Fujikawa scheme the prior shapes are borrowed as well,

    Beta(sum_i w[k, i] * (s1 + r_i),  sum_i w[k, i] * (s2 + n_i - r_i)),

with w[k, k] = 1 in both.  Weights come either from the calibrated power
prior (CPP) transform of the difference in response rates, or from the
Jensen-Shannon divergence between the baskets' individual posteriors.

Scalar functions working on a :class:`TrialState` are provided for
inspection; the ``*_batch`` functions are what the engine and the
simulator run on arrays of outcomes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .special import beta_tail, jsd_beta


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"beta shapes must be positive, got {self.alpha}, {self.beta}")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class DesignSpec:
    """Number of baskets, the common beta prior and the null response rate."""

    k: int
    p0: float
    shape1: float = 1.0
    shape2: float = 1.0

    def __post_init__(self):
        if not 2 <= self.k <= 5:
            raise ValueError("k must be between 2 and 5")
        if not (self.shape1 > 0 and self.shape2 > 0):
            raise ValueError("prior shapes must be positive")
        if not 0 < self.p0 < 1:
            raise ValueError("p0 must lie strictly between 0 and 1")

    @property
    def prior(self) -> BetaParams:
        return BetaParams(self.shape1, self.shape2)


@dataclass(frozen=True)
class CPP:
    """Calibrated power prior weights 1 / (1 + exp(a + b * log(d * n**0.25)))."""

    a: float = 1.0
    b: float = 1.0


@dataclass(frozen=True)
class JSD:
    """Weights (1 - JSD)**epsilon, set to zero unless they exceed tau."""

    epsilon: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if not 0 <= self.tau < 1:
            raise ValueError("tau must lie in [0, 1)")


@dataclass(frozen=True)
class NoBorrowing:
    """Every basket analysed on its own data; a reference for the others."""


@dataclass(frozen=True)
class WeightConfig:
    method: CPP | JSD | NoBorrowing
    share_prior: bool = False

    def __post_init__(self):
        # every supported method is a symmetric function of the two baskets'
        # data, which the symmetry reduction in the engine relies on
        if not isinstance(self.method, (CPP, JSD, NoBorrowing)):
            raise TypeError(f"unsupported weight method {self.method!r}")

    def params(self) -> dict:
        if isinstance(self.method, CPP):
            return {"a": self.method.a, "b": self.method.b}
        if isinstance(self.method, NoBorrowing):
            return {}
        return {"epsilon": self.method.epsilon, "tau": self.method.tau}


class Status(enum.IntEnum):
    ACTIVE = 0
    STOPPED_FUTILITY = 1
    STOPPED_EFFICACY = 2


@dataclass(frozen=True)
class TrialState:
    n: tuple
    r: tuple
    status: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        if self.status is None:
            object.__setattr__(self, "status", (Status.ACTIVE,) * len(self.n))
        else:
            object.__setattr__(self, "status", tuple(Status(s) for s in self.status))
        if not len(self.n) == len(self.r) == len(self.status):
            raise ValueError("n, r and status must have equal length")
        if any(not 0 <= r <= n for n, r in zip(self.n, self.r)):
            raise ValueError("need 0 <= r <= n in every basket")

    @classmethod
    def equal(cls, n: int, r, status=None) -> "TrialState":
        return cls((n,) * len(r), r, status)

    @property
    def k(self) -> int:
        return len(self.n)

    def check(self, design: DesignSpec):
        if self.k != design.k:
            raise ValueError(f"state has {self.k} baskets, design has {design.k}")


# --- weights -------------------------------------------------------------


def cpp_weight(r_k, n_k, r_i, n_i, a, b):
    """CPP weight between two baskets; 1 when the response rates coincide."""
    r_k, n_k, r_i, n_i = (np.asarray(v, float) for v in (r_k, n_k, r_i, n_i))
    d = np.abs(r_k / n_k - r_i / n_i)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        s = np.log(d * np.maximum(n_k, n_i) ** 0.25)
        w = 1.0 / (1.0 + np.exp(a + b * s))
    w = np.where(d == 0, 1.0, w)
    return w if w.ndim else float(w)


def jsd_weight(post_k: BetaParams, post_i: BetaParams, epsilon: float, tau: float) -> float:
    w = (1.0 - jsd_beta(post_k.alpha, post_k.beta, post_i.alpha, post_i.beta)) ** epsilon
    return w if w > tau else 0.0


def pairwise_weight(design: DesignSpec, config: WeightConfig, n_k, r_k, n_i, r_i):
    """Vectorised weight between baskets holding (n_k, r_k) and (n_i, r_i)."""
    method = config.method
    if isinstance(method, CPP):
        return cpp_weight(r_k, n_k, r_i, n_i, method.a, method.b)
    if isinstance(method, NoBorrowing):
        return np.zeros(np.broadcast(n_k, r_k, n_i, r_i).shape)
    n_k, r_k, n_i, r_i = np.broadcast_arrays(n_k, r_k, n_i, r_i)
    div = jsd_beta(
        design.shape1 + r_k, design.shape2 + n_k - r_k,
        design.shape1 + r_i, design.shape2 + n_i - r_i,
    )
    w = (1.0 - np.asarray(div)) ** method.epsilon
    return np.where(w > method.tau, w, 0.0)


class WeightTable:
    """Pairwise weights for every pair of (n, r) states with n in ``sizes``."""

    def __init__(self, design: DesignSpec, config: WeightConfig, sizes):
        self.sizes = tuple(sorted(set(int(s) for s in sizes)))
        self.offset = np.zeros(max(self.sizes) + 1, dtype=np.intp)
        n_all, r_all, start = [], [], 0
        for s in self.sizes:
            self.offset[s] = start
            n_all += [s] * (s + 1)
            r_all += list(range(s + 1))
            start += s + 1
        n_all, r_all = np.array(n_all), np.array(r_all)
        self.n_all, self.r_all = n_all, r_all
        self.table = np.asarray(
            pairwise_weight(design, config, n_all[:, None], r_all[:, None], n_all[None, :], r_all[None, :]),
            dtype=float,
        )

    def index(self, N, R):
        return self.offset[N] + R


@lru_cache(maxsize=64)
def weight_table(design: DesignSpec, config: WeightConfig, sizes: tuple) -> WeightTable:
    return WeightTable(design, config, sizes)


def weight_matrices_batch(R, N, design: DesignSpec, config: WeightConfig, sizes=None):
    """(M, k, k) weight matrices for M outcome rows."""
    R, N = np.asarray(R), np.asarray(N)
    if sizes is None:
        sizes = tuple(int(s) for s in np.unique(N))
    table = weight_table(design, config, tuple(sizes))
    idx = table.index(N, R)
    W = table.table[idx[..., :, None], idx[..., None, :]]
    k = R.shape[-1]
    W[..., np.arange(k), np.arange(k)] = 1.0
    return W


def shared_shapes_batch(R, N, design: DesignSpec, config: WeightConfig, sizes=None, W=None):
    """Shared posterior shapes (A, B), each (M, k), for outcome rows R out of N."""
    R, N = np.asarray(R, dtype=float), np.asarray(N)
    if W is None:
        W = weight_matrices_batch(R.astype(np.intp), N, design, config, sizes)
    F = N - R
    if config.share_prior:
        A = np.einsum("...ji,...i->...j", W, design.shape1 + R)
        B = np.einsum("...ji,...i->...j", W, design.shape2 + F)
    else:
        A = design.shape1 + np.einsum("...ji,...i->...j", W, R)
        B = design.shape2 + np.einsum("...ji,...i->...j", W, F)
    return A, B


def _other_columns(k: int) -> np.ndarray:
    return np.array([[i for i in range(k) if i != j] for j in range(k)], dtype=np.intp).reshape(k, k - 1)


def _posterior_keys(idx: np.ndarray, n_states: int) -> np.ndarray:
    """Integer code per (row, basket) of the basket's own state and the
    multiset of the other baskets' states, which fixes its posterior."""
    k = idx.shape[1]
    others = idx[:, _other_columns(k)]
    others.sort(axis=-1)
    digits = np.concatenate([idx[..., None], others], axis=-1)
    return digits @ (n_states ** np.arange(k, dtype=np.int64))


def final_reject_batch(R, N, status, design: DesignSpec, config: WeightConfig, lam: float, sizes=None):
    """Final rejection flags and shared posterior means, each (M, k).

    Stopped baskets keep lending their data; their own decision is the
    interim one (efficacy = reject, futility = no reject).
    """
    R, N = np.asarray(R), np.asarray(N)
    if sizes is None:
        sizes = tuple(int(s) for s in np.unique(N))
    table = weight_table(design, config, tuple(sizes))
    idx = table.index(N, R)
    k = idx.shape[1]
    # the incomplete beta dominates the cost and most rows repeat a
    # posterior seen elsewhere, so each distinct one is computed once
    codes, first, inverse = np.unique(
        _posterior_keys(idx, len(table.n_all)), return_index=True, return_inverse=True
    )
    rep = idx.reshape(-1)[first]
    row = first // k
    own = first % k
    others = idx[row[:, None], _other_columns(k)[own]]
    w = table.table[rep[:, None], others]
    r_own, f_own = table.r_all[rep], table.n_all[rep] - table.r_all[rep]
    r_oth, f_oth = table.r_all[others], table.n_all[others] - table.r_all[others]
    if config.share_prior:
        A = design.shape1 + r_own + (w * (design.shape1 + r_oth)).sum(axis=1)
        B = design.shape2 + f_own + (w * (design.shape2 + f_oth)).sum(axis=1)
    else:
        A = design.shape1 + r_own + (w * r_oth).sum(axis=1)
        B = design.shape2 + f_own + (w * f_oth).sum(axis=1)
    inverse = inverse.reshape(idx.shape)
    reject = (beta_tail(A, B, design.p0) >= lam)[inverse]
    status = np.asarray(status)
    reject = np.where(status == Status.ACTIVE, reject, status == Status.STOPPED_EFFICACY)
    return reject, (A / (A + B))[inverse]


# --- scalar API ----------------------------------------------------------


def _arrays(state: TrialState):
    return np.array([state.r]), np.array([state.n])


def weight_matrix(state: TrialState, design: DesignSpec, config: WeightConfig) -> np.ndarray:
    """Symmetric k x k sharing weights with unit diagonal."""
    state.check(design)
    R, N = _arrays(state)
    return weight_matrices_batch(R, N, design, config)[0]


def shared_posterior(state: TrialState, weights, design: DesignSpec, config: WeightConfig) -> list[BetaParams]:
    state.check(design)
    R, N = _arrays(state)
    W = np.array(weights, dtype=float)[None]
    A, B = shared_shapes_batch(R, N, design, config, W=W)
    return [BetaParams(float(a), float(b)) for a, b in zip(A[0], B[0])]


def final_decision(state: TrialState, design: DesignSpec, config: WeightConfig, lam: float) -> tuple[bool, ...]:
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    state.check(design)
    R, N = _arrays(state)
    reject, _ = final_reject_batch(R, N, np.array([state.status]), design, config, lam)
    return tuple(bool(v) for v in reject[0])


def weight_curve(n: int, r1: int, design: DesignSpec, config: WeightConfig) -> list[tuple[int, float]]:
    """Weight between a basket with r1 of n responses and one with r2 of n."""
    if not 0 <= r1 <= n:
        raise ValueError("need 0 <= r1 <= n")
    r2 = np.arange(n + 1)
    w = pairwise_weight(design, config, n, r1, n, r2)
    return [(int(x), float(y)) for x, y in zip(r2, np.broadcast_to(w, r2.shape))]
