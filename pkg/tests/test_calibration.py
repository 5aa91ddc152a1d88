import itertools
import math

import numpy as np
import pytest
from scipy import stats

from basketoc import (
    CPP,
    JSD,
    DesignSpec,
    InfeasibleError,
    InterimConfig,
    NoBorrowing,
    StageLayout,
    TrueScenario,
    WeightConfig,
    adjust_lambda,
    evaluate,
    get_scenarios,
    opt_design,
    weight_grid,
)
from basketoc.calibration import lambda_grid, null_fwer

DESIGN3 = DesignSpec(3, 0.2)


def test_lambda_grid():
    assert lambda_grid(1).tolist() == pytest.approx([0.1 * i for i in range(1, 10)])
    assert len(lambda_grid(3)) == 999


def test_no_borrowing_against_binomial_enumeration():
    # k = 2, n = 5: all 36 outcomes, every lambda on the 3-digit grid
    design, n = DesignSpec(2, 0.2), 5
    probs = [math.comb(n, r) * 0.2**r * 0.8 ** (n - r) for r in range(n + 1)]
    tails = stats.beta.sf(0.2, 1 + np.arange(n + 1), 1 + n - np.arange(n + 1))
    alpha = 0.05
    feasible = []
    for lam in lambda_grid(3):
        reject = tails >= lam
        fwer = sum(probs[r1] * probs[r2] for r1, r2 in itertools.product(range(n + 1), repeat=2)
                   if reject[r1] or reject[r2])
        if fwer <= alpha:
            feasible.append((lam, fwer))
    lam, fwer = feasible[0]
    cal = adjust_lambda(design, StageLayout(n), WeightConfig(NoBorrowing()), alpha=alpha)
    assert cal.lam == pytest.approx(lam, abs=1e-12)
    assert cal.fwer == pytest.approx(fwer, abs=1e-12)


@pytest.mark.parametrize(
    "layout,config,interim",
    [
        (StageLayout(8), WeightConfig(CPP(1, 1)), None),
        (StageLayout(6), WeightConfig(JSD(2, 0.2), True), None),
        (StageLayout(8, 4), WeightConfig(CPP(2, 1)), InterimConfig("postpred")),
        (StageLayout(8, 4), WeightConfig(CPP(1, 2)), InterimConfig("posterior", 0.2, 0.999)),
    ],
)
def test_bisection_equals_exhaustive_scan(layout, config, interim):
    alpha = 0.1
    scan = [lam for lam in lambda_grid(2) if null_fwer(DESIGN3, layout, lam, config, interim) <= alpha]
    cal = adjust_lambda(DESIGN3, layout, config, interim, alpha=alpha, prec_digits=2)
    assert cal.lam == pytest.approx(scan[0], abs=1e-12)
    assert cal.fwer <= alpha
    if cal.lam > 0.01:
        assert null_fwer(DESIGN3, layout, cal.lam - 0.01, config, interim) > alpha


def test_alpha_close_to_one():
    config = WeightConfig(CPP(1, 1))
    cal = adjust_lambda(DESIGN3, StageLayout(10), config, alpha=1 - 1e-9)
    assert cal.fwer <= 1 - 1e-9
    if cal.lam > 0.001:
        assert null_fwer(DESIGN3, StageLayout(10), cal.lam - 0.001, config) > 1 - 1e-9


def test_infeasible_calibration():
    with pytest.raises(InfeasibleError):
        adjust_lambda(DESIGN3, StageLayout(10), WeightConfig(CPP(1, 1)), alpha=1e-6, prec_digits=1)
    with pytest.raises(ValueError):
        adjust_lambda(DESIGN3, StageLayout(10), WeightConfig(CPP(1, 1)), alpha=0)
    with pytest.raises(ValueError):
        adjust_lambda(DESIGN3, StageLayout(10), WeightConfig(CPP(1, 1)), prec_digits=0)


def test_get_scenarios():
    m = get_scenarios(DESIGN3, 0.5)
    assert m.labels == ["0 Active", "1 Active", "2 Active", "3 Active"]
    assert m.values.tolist() == [
        [0.2, 0.2, 0.2, 0.5],
        [0.2, 0.2, 0.5, 0.5],
        [0.2, 0.5, 0.5, 0.5],
    ]
    m2 = get_scenarios(DesignSpec(2, 0.1), 0.4)
    assert [s.p for s in m2.scenarios()] == [(0.1, 0.1), (0.1, 0.4), (0.4, 0.4)]
    with pytest.raises(ValueError):
        get_scenarios(DESIGN3, 0.2)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_scenario_matrix_structure(k):
    m = get_scenarios(DesignSpec(k, 0.15), 0.45)
    assert m.values.shape == (k, k + 1)
    for j in range(k + 1):
        assert np.sum(m.values[:, j] == 0.45) == j
    assert np.all(m.values[:, 0] == 0.15)


def test_weight_grid_is_cartesian_first_slowest():
    grid = weight_grid("cpp", a=[1, 2, 3], b=[1, 2, 3])
    assert [(c.method.a, c.method.b) for c in grid] == list(itertools.product([1, 2, 3], repeat=2))
    jsd = weight_grid("jsd", True, epsilon=[1, 2])
    assert [(c.method.epsilon, c.method.tau, c.share_prior) for c in jsd] == [(1, 0, True), (2, 0, True)]
    with pytest.raises(ValueError):
        weight_grid("nope")


def test_opt_design_one_point_grid():
    scenarios = get_scenarios(DESIGN3, 0.5)
    table = opt_design(DESIGN3, StageLayout(10), [WeightConfig(CPP(1, 1))], scenarios, alpha=0.1, prec_digits=2)
    assert len(table.rows) == 1 and not table.failed
    row = table.best
    assert row.lam == adjust_lambda(DESIGN3, StageLayout(10), row.config, alpha=0.1, prec_digits=2).lam
    assert row.mean_ecd == pytest.approx(np.mean(row.ecd), abs=1e-12)


def test_opt_design_rows_consistent_and_sorted():
    layout = StageLayout(8, 4)
    interim = InterimConfig("postpred")
    scenarios = get_scenarios(DESIGN3, 0.5)
    configs = weight_grid("cpp", a=[1, 2], b=[1, 3])
    table = opt_design(DESIGN3, layout, configs, scenarios, alpha=0.1, prec_digits=2, interim=interim)
    assert len(table.rows) == 4
    means = [r.mean_ecd for r in table.rows]
    assert means == sorted(means, reverse=True)
    for row in table.rows:
        assert row.lam == adjust_lambda(DESIGN3, layout, row.config, interim, 0.1, 2).lam
        for s, value in zip(scenarios.scenarios(), row.ecd):
            assert value == evaluate(DESIGN3, layout, row.lam, row.config, s, interim).ecd
        assert abs(row.mean_ecd - np.mean(row.ecd)) <= 1e-10
    rec = table.records()[0]
    assert list(rec) == ["a", "b", "lambda", *scenarios.labels, "mean_ecd"]


def test_opt_design_ties_keep_grid_order():
    # with tau close to one only identical data are shared, whatever epsilon
    configs = [WeightConfig(CPP(1, 1)), WeightConfig(JSD(2, 0.99)), WeightConfig(JSD(1, 0.99))]
    table = opt_design(DESIGN3, StageLayout(8), configs, get_scenarios(DESIGN3, 0.5), alpha=0.1, prec_digits=2)
    tied = [r.config for r in table.rows if r.config.method != CPP(1, 1)]
    assert tied == configs[1:]
    a, b = (r for r in table.rows if r.config in configs[1:])
    assert a.mean_ecd == b.mean_ecd


def test_opt_design_parallel_matches_serial():
    configs = weight_grid("cpp", a=[1, 2], b=[1, 2])
    scenarios = get_scenarios(DESIGN3, 0.5)
    serial = opt_design(DESIGN3, StageLayout(10), configs, scenarios, 0.1, 2)
    parallel = opt_design(DESIGN3, StageLayout(10), configs, scenarios, 0.1, 2, workers=2)
    assert serial.records() == parallel.records()


def test_opt_design_failed_rows():
    configs = weight_grid("cpp", a=[1], b=[1, 2])
    table = opt_design(DESIGN3, StageLayout(10), configs, get_scenarios(DESIGN3, 0.5), alpha=1e-6, prec_digits=1)
    assert table.rows == [] and len(table.failed) == 2
    with pytest.raises(ValueError):
        opt_design(DESIGN3, StageLayout(10), [], get_scenarios(DESIGN3, 0.5))
    with pytest.raises(ValueError):
        opt_design(DESIGN3, StageLayout(10), configs, get_scenarios(DesignSpec(2, 0.2), 0.5))


def test_fwer_monotone_in_lambda():
    for layout, interim in ((StageLayout(10), None), (StageLayout(10, 5), InterimConfig("postpred"))):
        values = [null_fwer(DESIGN3, layout, lam, WeightConfig(CPP(1, 1)), interim) for lam in lambda_grid(2)]
        assert np.all(np.diff(values) <= 1e-15)


def test_true_scenario_null_used():
    assert null_fwer(DESIGN3, StageLayout(6), 0.9, WeightConfig(CPP(1, 1))) == evaluate(
        DESIGN3, StageLayout(6), 0.9, WeightConfig(CPP(1, 1)), TrueScenario((0.2,) * 3)).fwer
