"""Posterior threshold calibration and grid search over weight parameters."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import CPP, JSD, DesignSpec, WeightConfig
from .engine import InterimConfig, StageLayout, TrueScenario, evaluate


class InfeasibleError(ValueError):
    """No threshold on the grid keeps the FWER at or below alpha."""


@dataclass(frozen=True)
class Calibration:
    lam: float
    fwer: float


def lambda_grid(prec_digits: int) -> np.ndarray:
    scale = 10**prec_digits
    return np.arange(1, scale) / scale


def null_fwer(design, layout, lam, config, interim=None) -> float:
    return evaluate(design, layout, lam, config, TrueScenario.null(design), interim).fwer


def adjust_lambda(design: DesignSpec, layout: StageLayout, config: WeightConfig,
                  interim: InterimConfig | None = None, alpha: float = 0.05,
                  prec_digits: int = 3) -> Calibration:
    """Smallest lambda with ``prec_digits`` decimals whose global-null FWER
    is at most ``alpha``.

    Bisection over the grid i / 10**prec_digits, relying on the FWER being
    non-increasing in lambda.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if prec_digits < 1:
        raise ValueError("prec_digits must be at least 1")
    scale = 10**prec_digits
    cache: dict[int, float] = {}

    def fwer(i):
        if i not in cache:
            cache[i] = null_fwer(design, layout, i / scale, config, interim)
        return cache[i]

    lo, hi = 1, scale - 1
    if fwer(hi) > alpha:
        raise InfeasibleError(
            f"FWER at lambda={hi / scale} is {fwer(hi):.7g}, above alpha={alpha}"
        )
    while lo < hi:
        mid = (lo + hi) // 2
        if fwer(mid) <= alpha:
            hi = mid
        else:
            lo = mid + 1
    return Calibration(hi / scale, fwer(hi))


@dataclass
class ScenarioMatrix:
    """Baskets in rows, scenarios in columns; column j has j active baskets,
    filled from the last basket upwards."""

    values: np.ndarray
    labels: list[str]

    def scenarios(self) -> list[TrueScenario]:
        return [TrueScenario(tuple(col)) for col in self.values.T]


def get_scenarios(design: DesignSpec, p1: float) -> ScenarioMatrix:
    if not p1 > design.p0:
        raise ValueError("p1 must exceed p0")
    k = design.k
    values = np.full((k, k + 1), design.p0)
    for j in range(1, k + 1):
        values[k - j :, j] = p1
    return ScenarioMatrix(values, [f"{j} Active" for j in range(k + 1)])


def weight_grid(method: str = "cpp", share_prior: bool = False, **values) -> list[WeightConfig]:
    """Cartesian product of tuning parameter values, first parameter slowest.

    ``weight_grid("cpp", a=[1, 2, 3], b=[1, 2, 3])`` gives nine configs.
    """
    if method == "cpp":
        names, cls = ("a", "b"), CPP
    elif method == "jsd":
        names, cls = ("epsilon", "tau"), JSD
    else:
        raise ValueError(f"unknown weight method {method!r}")
    axes = [np.atleast_1d(values.get(name, [getattr(cls(), name)])).tolist() for name in names]
    return [WeightConfig(cls(*combo), share_prior) for combo in itertools.product(*axes)]


@dataclass
class DesignRow:
    config: WeightConfig
    lam: float
    ecd: tuple
    mean_ecd: float


@dataclass
class RankedDesignTable:
    rows: list[DesignRow]
    labels: list[str]
    failed: list[tuple[WeightConfig, str]] = field(default_factory=list)

    @property
    def best(self) -> DesignRow:
        return self.rows[0]

    def records(self) -> list[dict]:
        out = []
        for row in self.rows:
            rec = dict(row.config.params())
            rec["lambda"] = row.lam
            rec.update(zip(self.labels, row.ecd))
            rec["mean_ecd"] = row.mean_ecd
            out.append(rec)
        return out


def _evaluate_grid_point(args):
    design, layout, config, interim, scenarios, alpha, prec_digits = args
    try:
        cal = adjust_lambda(design, layout, config, interim, alpha, prec_digits)
    except InfeasibleError as exc:
        return None, str(exc)
    ecds = tuple(evaluate(design, layout, cal.lam, config, s, interim).ecd for s in scenarios)
    return DesignRow(config, cal.lam, ecds, float(np.mean(ecds))), None


def opt_design(design: DesignSpec, layout: StageLayout, configs, scenarios: ScenarioMatrix,
               alpha: float = 0.05, prec_digits: int = 3, interim: InterimConfig | None = None,
               workers: int = 1) -> RankedDesignTable:
    """Calibrate lambda for every weight configuration, then rank the
    configurations by their mean expected number of correct decisions."""
    configs = list(configs)
    if not configs:
        raise ValueError("empty parameter grid")
    if scenarios.values.shape[0] != design.k:
        raise ValueError("scenario matrix does not match the number of baskets")
    tasks = [(design, layout, c, interim, scenarios.scenarios(), alpha, prec_digits) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_grid_point, tasks))
    else:
        results = [_evaluate_grid_point(t) for t in tasks]
    rows, failed = [], []
    for config, (row, err) in zip(configs, results):
        if row is None:
            failed.append((config, err))
        else:
            rows.append(row)
    rows.sort(key=lambda r: -r.mean_ecd)  # stable: ties keep grid order
    return RankedDesignTable(rows, scenarios.labels, failed)
