"""Exact operating characteristics by enumeration of all trial outcomes.

Baskets with the same true response rate are exchangeable, and every
decision rule here is permutation equivariant, so only one representative
per multiset of outcomes is evaluated and weighted by the number of
arrangements.  At the second stage the exchangeable groups are refined by
interim count and interim status.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .design import (
    DesignSpec,
    Status,
    TrialState,
    WeightConfig,
    final_reject_batch,
    shared_shapes_batch,
)
from .special import beta_binom_pmf, beta_tail, binom_pmf

# rows of final outcomes evaluated at once in the two-stage engine
_CHUNK_ROWS = 200_000


@dataclass(frozen=True)
class TrueScenario:
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if any(not 0 <= v <= 1 for v in self.p):
            raise ValueError("true response rates must lie in [0, 1]")

    @classmethod
    def null(cls, design: DesignSpec) -> "TrueScenario":
        return cls((design.p0,) * design.k)

    def null_mask(self, design: DesignSpec) -> np.ndarray:
        return np.array(self.p) <= design.p0

    def check(self, design: DesignSpec):
        if len(self.p) != design.k:
            raise ValueError(f"scenario has {len(self.p)} rates, design has {design.k} baskets")


@dataclass(frozen=True)
class StageLayout:
    n: int
    n1: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.n1 is not None and not 1 <= self.n1 < self.n:
            raise ValueError("need 1 <= n1 < n")

    @property
    def two_stage(self) -> bool:
        return self.n1 is not None


@dataclass(frozen=True)
class InterimConfig:
    """Interim stopping rule.

    ``kind`` is ``"postpred"`` (posterior predictive probability of a final
    rejection) or ``"posterior"`` (shared posterior probability that the
    response rate exceeds p0).  A basket stops for futility when the
    statistic is below ``prob_futstop`` and for efficacy when it is above
    ``prob_effstop``.

    ``ppp_posterior`` selects the posterior used for the hypothetical final
    analysis inside the predictive probability: ``"individual"`` updates
    the basket's own prior with its own data only, ``"shared"`` recomputes
    the borrowing with the other baskets frozen at their interim data.
    """

    kind: str = "postpred"
    prob_futstop: float = 0.1
    prob_effstop: float = 0.9
    ppp_posterior: str = "individual"

    def __post_init__(self):
        if self.kind not in ("postpred", "posterior"):
            raise ValueError(f"unknown interim kind {self.kind!r}")
        if self.ppp_posterior not in ("individual", "shared"):
            raise ValueError(f"unknown ppp_posterior {self.ppp_posterior!r}")
        if not 0 <= self.prob_futstop <= self.prob_effstop <= 1:
            raise ValueError("need 0 <= prob_futstop <= prob_effstop <= 1")


@dataclass
class OCResult:
    rejection_prob: np.ndarray
    fwer: float
    fwpower: float
    ecd: float
    ess: np.ndarray
    ess_total: float
    mean_posterior_mean: np.ndarray
    mse: np.ndarray
    mass: float = 1.0
    null: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "rejection_prob": self.rejection_prob.tolist(),
            "fwer": self.fwer,
            "fwpower": self.fwpower,
            "ecd": self.ecd,
            "ess": self.ess.tolist(),
            "ess_total": self.ess_total,
            "mean_posterior_mean": self.mean_posterior_mean.tolist(),
            "mse": self.mse.tolist(),
        }


@dataclass(frozen=True)
class OutcomeClass:
    outcome: tuple
    multiplicity: int


# --- enumeration ---------------------------------------------------------


def exchangeable_groups(keys) -> list[list[int]]:
    """Indices grouped by equal key, in order of first appearance."""
    groups: dict = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    return list(groups.values())


@lru_cache(maxsize=256)
def _group_classes(m: int, size: int):
    reps = np.array(list(combinations_with_replacement(range(m + 1), size)), dtype=np.intp)
    fact = math.factorial(size)
    mult = np.empty(len(reps), dtype=np.int64)
    for j, row in enumerate(reps):
        _, counts = np.unique(row, return_counts=True)
        mult[j] = fact // math.prod(math.factorial(c) for c in counts)
    return reps, mult


@lru_cache(maxsize=1024)
def _class_arrays_cached(m: int, groups: tuple, k: int):
    if not groups:
        return np.zeros((1, k), dtype=np.intp), np.ones(1, dtype=np.int64)
    parts = [_group_classes(m, len(g)) for g in groups]
    grids = np.meshgrid(*[np.arange(len(reps)) for reps, _ in parts], indexing="ij")
    R = np.zeros((grids[0].size, k), dtype=np.intp)
    mult = np.ones(grids[0].size, dtype=np.int64)
    for g, (reps, gm), grid in zip(groups, parts, grids):
        sel = grid.ravel()
        R[:, list(g)] = reps[sel]
        mult *= gm[sel]
    R.flags.writeable = False
    mult.flags.writeable = False
    return R, mult


def class_arrays(m: int, groups, k: int):
    """Representatives (M, k) and multiplicities (M,) for stage size m.

    Baskets inside one group are exchangeable; baskets in no group are
    held at zero.
    """
    return _class_arrays_cached(m, tuple(tuple(g) for g in groups), k)


def enumerate_outcomes(m: int, p, symmetry: bool = True):
    """Yield one :class:`OutcomeClass` per equivalence class of {0..m}^k."""
    p = tuple(p)
    groups = exchangeable_groups(p) if symmetry else [[i] for i in range(len(p))]
    R, mult = class_arrays(m, groups, len(p))
    for row, c in zip(R, mult):
        yield OutcomeClass(tuple(int(v) for v in row), int(c))


def _group_mean(values: np.ndarray, groups) -> np.ndarray:
    # per-basket expectations over an orbit equal the group mean times the
    # multiplicity, since members of a group are exchangeable
    out = values.copy()
    for g in groups:
        if len(g) > 1:
            out[..., g] = values[..., g].mean(axis=-1, keepdims=True)
    return out


# --- interim analysis ----------------------------------------------------


def _ppp_batch(R1, design: DesignSpec, layout: StageLayout, lam: float, config: WeightConfig, mode: str, A=None, B=None):
    n, n1 = layout.n, layout.n1
    n2 = n - n1
    R1 = np.asarray(R1)
    if A is None:
        A, B = shared_shapes_batch(R1, np.full_like(R1, n1), design, config, sizes=(n1, n))
    x = np.arange(n2 + 1)
    pred = beta_binom_pmf(n2, x, A[..., None], B[..., None])  # (M, k, n2+1)
    if mode == "individual":
        r = np.arange(n1 + 1)[:, None] + x[None, :]
        tails = beta_tail(design.shape1 + r, design.shape2 + n - r, design.p0)
        hit = tails[R1] >= lam
    else:
        M, k = R1.shape
        hit = np.empty((M, k, n2 + 1), dtype=bool)
        for j in range(k):
            Rh = np.repeat(R1[:, None, :], n2 + 1, axis=1)
            Rh[:, :, j] += x
            Nh = np.full_like(Rh, n1)
            Nh[:, :, j] = n
            Ah, Bh = shared_shapes_batch(Rh, Nh, design, config, sizes=(n1, n))
            hit[:, j, :] = beta_tail(Ah[..., j], Bh[..., j], design.p0) >= lam
    # rounding can push the sum a hair past 1, which would defeat
    # prob_effstop = 1
    return np.minimum(np.where(hit, pred, 0.0).sum(axis=-1), 1.0)


def interim_status_batch(R1, design: DesignSpec, layout: StageLayout, lam: float,
                         config: WeightConfig, interim: InterimConfig) -> np.ndarray:
    """Interim decisions (M, k) as :class:`Status` codes for interim outcomes R1."""
    R1 = np.asarray(R1)
    A, B = shared_shapes_batch(R1, np.full_like(R1, layout.n1), design, config, sizes=(layout.n1, layout.n))
    if interim.kind == "posterior":
        stat = beta_tail(A, B, design.p0)
    else:
        stat = _ppp_batch(R1, design, layout, lam, config, interim.ppp_posterior, A, B)
    return np.where(
        stat < interim.prob_futstop,
        Status.STOPPED_FUTILITY,
        np.where(stat > interim.prob_effstop, Status.STOPPED_EFFICACY, Status.ACTIVE),
    ).astype(np.int8)


def ppp(basket: int, state: TrialState, design: DesignSpec, n: int, lam: float,
        config: WeightConfig, mode: str = "individual") -> float:
    """Posterior predictive probability that ``basket`` is rejected at n.

    ``state`` holds the interim data, every basket at the same n1 <= n.
    """
    state.check(design)
    n1 = state.n[0]
    if any(v != n1 for v in state.n) or n1 > n:
        raise ValueError("interim state needs equal sample sizes not above n")
    if n1 == n:
        # no future data: the final decision is already determined
        from .design import final_decision

        return float(final_decision(TrialState.equal(n, state.r), design, config, lam)[basket])
    layout = StageLayout(n, n1)
    return float(_ppp_batch(np.array([state.r]), design, layout, lam, config, mode)[0, basket])


def interim_decision(state: TrialState, design: DesignSpec, layout: StageLayout, lam: float,
                     config: WeightConfig, interim: InterimConfig) -> tuple[Status, ...]:
    state.check(design)
    if any(v != layout.n1 for v in state.n):
        raise ValueError("interim state must hold n1 observations in every basket")
    codes = interim_status_batch(np.array([state.r]), design, layout, lam, config, interim)[0]
    return tuple(Status(int(c)) for c in codes)


# --- operating characteristics ------------------------------------------


def _row_stats(reject, pm, size, p, null):
    """Per-basket (M, k, 4) and family (M, 3) statistics of outcome rows."""
    per_basket = np.stack([reject.astype(float), pm, (pm - p) ** 2, size.astype(float)], axis=-1)
    alt = ~null
    family = np.stack(
        [
            reject[:, null].any(axis=1).astype(float),
            reject[:, alt].any(axis=1).astype(float),
            np.ones(len(reject)),
        ],
        axis=-1,
    )
    return per_basket, family


def _result(per_basket, family, null) -> OCResult:
    rej = per_basket[:, 0]
    ecd = float(np.sum(1.0 - rej[null]) + np.sum(rej[~null]))
    return OCResult(
        rejection_prob=rej,
        fwer=float(family[0]) if null.any() else 0.0,
        fwpower=float(family[1]) if (~null).any() else 0.0,
        ecd=ecd,
        ess=per_basket[:, 3],
        ess_total=float(per_basket[:, 3].sum()),
        mean_posterior_mean=per_basket[:, 1],
        mse=per_basket[:, 2],
        mass=float(family[2]),
        null=null,
    )


def single_stage_oc(design: DesignSpec, layout: StageLayout, lam: float, config: WeightConfig,
                    scenario: TrueScenario, symmetry: bool = True) -> OCResult:
    scenario.check(design)
    k, n = design.k, layout.n
    p = np.array(scenario.p)
    null = scenario.null_mask(design)
    groups = exchangeable_groups(scenario.p) if symmetry else [[i] for i in range(k)]
    R, mult = class_arrays(n, groups, k)
    N = np.full_like(R, n)
    weight = mult * binom_pmf(n, R, p).prod(axis=1)
    reject, pm = final_reject_batch(R, N, np.zeros_like(R), design, config, lam, sizes=(n,))
    per_basket, family = _row_stats(reject, pm, N, p, null)
    per_basket = _group_mean(per_basket.transpose(0, 2, 1), groups).transpose(0, 2, 1)
    return _result(np.einsum("m,mkf->kf", weight, per_basket), weight @ family, null)


def two_stage_oc(design: DesignSpec, layout: StageLayout, lam: float, config: WeightConfig,
                 interim: InterimConfig, scenario: TrueScenario, symmetry: bool = True) -> OCResult:
    scenario.check(design)
    if not layout.two_stage:
        raise ValueError("two-stage evaluation needs n1")
    k, n, n1 = design.k, layout.n, layout.n1
    n2 = n - n1
    sizes = (n1, n)
    p = np.array(scenario.p)
    null = scenario.null_mask(design)
    groups1 = exchangeable_groups(scenario.p) if symmetry else [[i] for i in range(k)]

    R1, mult1 = class_arrays(n1, groups1, k)
    w1 = mult1 * binom_pmf(n1, R1, p).prod(axis=1)
    status = interim_status_batch(R1, design, layout, lam, config, interim)
    pmf2 = binom_pmf(n2, np.arange(n2 + 1)[:, None], p[None, :])  # (n2+1, k)

    cond_basket = np.empty((len(R1), k, 4))
    cond_family = np.empty((len(R1), 3))
    pending = []  # (interim index, stage-two groups, rows)

    def flush():
        if not pending:
            return
        R = np.concatenate([b[2][0] for b in pending])
        N = np.concatenate([b[2][1] for b in pending])
        S = np.concatenate([b[2][2] for b in pending])
        w = np.concatenate([b[2][3] for b in pending])
        reject, pm = final_reject_batch(R, N, S, design, config, lam, sizes=sizes)
        per_basket, family = _row_stats(reject, pm, N, p, null)
        per_basket *= w[:, None, None]
        family *= w[:, None]
        start = 0
        for i, groups2, rows in pending:
            stop = start + len(rows[3])
            pb = per_basket[start:stop].sum(axis=0)
            cond_basket[i] = _group_mean(pb.T, groups2).T
            cond_family[i] = family[start:stop].sum(axis=0)
            start = stop
        pending.clear()

    n_rows = 0
    for i in range(len(R1)):
        cont = np.flatnonzero(status[i] == Status.ACTIVE)
        if symmetry:
            groups2 = [[int(cont[j]) for j in g] for g in exchangeable_groups(
                [(scenario.p[c], int(R1[i, c])) for c in cont])]
        else:
            groups2 = [[int(c)] for c in cont]
        X, mult2 = class_arrays(n2, groups2, k)
        w2 = mult2 * np.prod(pmf2[X[:, cont], cont], axis=1)
        N = np.full_like(X, n1)
        N[:, cont] = n
        S = np.broadcast_to(status[i], X.shape)
        pending.append((i, groups2, (R1[i] + X, N, S, w2)))
        n_rows += len(X)
        if n_rows >= _CHUNK_ROWS:
            flush()
            n_rows = 0
    flush()

    cond_basket = _group_mean(cond_basket.transpose(0, 2, 1), groups1).transpose(0, 2, 1)
    return _result(np.einsum("m,mkf->kf", w1, cond_basket), w1 @ cond_family, null)


def evaluate(design: DesignSpec, layout: StageLayout, lam: float, config: WeightConfig,
             scenario: TrueScenario | None = None, interim: InterimConfig | None = None,
             symmetry: bool = True) -> OCResult:
    """Exact operating characteristics of a single- or two-stage design."""
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    if scenario is None:
        scenario = TrueScenario.null(design)
    if layout.two_stage:
        if interim is None:
            raise ValueError("a two-stage layout needs an interim rule")
        return two_stage_oc(design, layout, lam, config, interim, scenario, symmetry)
    return single_stage_oc(design, layout, lam, config, scenario, symmetry)


# Table-style entry points -------------------------------------------------


def toer(design, layout, lam, config, scenario=None, interim=None) -> dict:
    """Basket-wise rejection probabilities and the family-wise error rate."""
    oc = evaluate(design, layout, lam, config, scenario, interim)
    return {"rejection_probabilities": oc.rejection_prob, "fwer": oc.fwer}


def power(design, layout, lam, config, scenario, interim=None) -> dict:
    """Basket-wise rejection probabilities and the probability of rejecting
    at least one truly active basket."""
    oc = evaluate(design, layout, lam, config, scenario, interim)
    return {"rejection_probabilities": oc.rejection_prob, "fwpower": oc.fwpower}


def ecd(design, layout, lam, config, scenario, interim=None) -> float:
    return evaluate(design, layout, lam, config, scenario, interim).ecd


def ess(design, layout, lam, config, scenario, interim=None) -> dict:
    oc = evaluate(design, layout, lam, config, scenario, interim)
    return {"per_basket": oc.ess, "total": oc.ess_total}


def estim(design, layout, lam, config, scenario, interim=None) -> dict:
    oc = evaluate(design, layout, lam, config, scenario, interim)
    return {"mean_posterior_mean": oc.mean_posterior_mean, "mse": oc.mse}
