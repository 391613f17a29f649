import numpy as np
import pytest
from scipy import stats as sps

from lmsvlab.estimators import PointPattern
from lmsvlab.gaussian import LongMemorySpec
from lmsvlab.model import SvModel, VolatilityFn
from lmsvlab.tails import LeverageCoupling, TailLaw
from lmsvlab.verify import (
    ExperimentPlan,
    StatisticSpec,
    dichotomy_scan,
    no_common_jump_test,
    poisson_diagnostics,
    predict_verdict,
    run_plan,
)

IID = LongMemorySpec(coeff_law="explicit", coeffs=(1.0,))


def stable_plan(**kw):
    law = TailLaw(alpha=1.5, beta=0.75, centered=True)
    model = SvModel(IID, law, LeverageCoupling(), VolatilityFn.constant(1.0))
    args = dict(
        model=model,
        statistic=StatisticSpec(kind="sum"),
        n_grid=(2**10, 2**12, 2**14),
        replicates=300,
        master_seed=11,
    )
    args.update(kw)
    return ExperimentPlan(**args)


def hermite_plan(**kw):
    law = TailLaw(alpha=1.5, beta=1.0)
    model = SvModel(
        LongMemorySpec(hurst=0.9, truncation_m=10**10), law,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    args = dict(
        model=model,
        statistic=StatisticSpec(kind="abs_sum", p=1.0),
        n_grid=(2**12, 2**14, 2**16),
        replicates=250,
        master_seed=5,
    )
    args.update(kw)
    return ExperimentPlan(**args)


def test_plan_validation():
    with pytest.raises(ValueError):
        stable_plan(n_grid=(1024, 1024))
    with pytest.raises(ValueError):
        stable_plan(replicates=50)  # distribution test needs >= 200
    p = stable_plan(replicates=50, distance="none")
    assert p.replicates == 50


def test_predict_verdict_paths():
    p = stable_plan()
    v = predict_verdict(p.model, p.statistic)
    assert v.regime == "stable_levy" and v.rate_exponent == pytest.approx(2 / 3)
    h = hermite_plan()
    v = predict_verdict(h.model, h.statistic)
    assert v.regime == "hermite_limit" and v.tau == 1
    # signed sum without centering is refused
    law = TailLaw(alpha=1.5, beta=1.0)
    m = SvModel(IID, law, LeverageCoupling(), VolatilityFn.constant(1.0))
    with pytest.raises(ValueError):
        predict_verdict(m, StatisticSpec(kind="sum"))


def test_run_plan_stable_regime():
    s = run_plan(stable_plan())
    assert s.verdict_match is True
    assert abs(s.fitted_exponent - 2 / 3) < 0.07
    assert s.distance_p > 0.01
    assert s.r_squared > 0.95


def test_run_plan_reproducible_and_worker_invariant():
    plan = stable_plan(replicates=60, distance="none", n_grid=(2**10, 2**12))
    s1 = run_plan(plan, workers=1)
    s2 = run_plan(plan, workers=1)
    for n in plan.n_grid:
        np.testing.assert_array_equal(s1.statistics_by_n[n], s2.statistics_by_n[n])
    s3 = run_plan(plan, workers=2)
    for n in plan.n_grid:
        np.testing.assert_array_equal(s1.statistics_by_n[n], s3.statistics_by_n[n])


def test_negative_control_wrong_reference_rejected():
    # stable-regime data tested against a Gaussian reference: the distance
    # test must reject (p < 0.01), so a mismatch is never silently passed.
    # (The affine fit leaves a shape distance of ~0.07 between these laws,
    # which needs ~10^3 replicates to resolve; the same control runs at
    # acceptance scale in the other direction.)
    plan = stable_plan(
        reference_regime="short_memory_gaussian", replicates=2000,
        n_grid=(2**10, 2**12, 2**14),
    )
    s = run_plan(plan)
    assert s.distance_p < 0.01
    assert s.verdict_match is not True


def test_inconclusive_on_poor_regression(monkeypatch):
    import lmsvlab.verify as v

    rng = np.random.default_rng(0)

    def noisy(args):
        plan, n_index, rep_range = args
        return 1000.0 + rng.standard_normal(len(list(rep_range)))

    monkeypatch.setattr(v, "_statistic_batch", noisy)
    plan = stable_plan(distance="none")
    s = v.run_plan(plan)
    assert s.r_squared <= plan.r2_threshold
    assert s.verdict_match is None  # inconclusive, not a silent pass


def test_dichotomy_scan_predicted_boundaries():
    law = TailLaw(alpha=1.5, beta=1.0)
    mix = LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.5))
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=3000), law, mix, VolatilityFn.exp()
    )
    rows = dichotomy_scan(model, 1.0, [0.6, 0.75, 0.9], replicates=0)
    # exp volatility: tau = 1 for both couplings, boundary H = p/alpha
    for r in rows:
        assert r["tau"] == 1
        assert r["boundary"] == pytest.approx(2 / 3)
        want = "hermite_limit" if r["hurst"] > 2 / 3 else "stable_levy"
        assert r["regime"] == want
    # quadratic volatility: leverage boundary 1/alpha vs lmsv (1 + 1/alpha)/2
    model2 = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=3000), law, mix,
        VolatilityFn.even_power(1),
    )
    rows2 = dichotomy_scan(model2, 1.0, [0.6, 0.9], replicates=0)
    for r in rows2:
        if r["coupling"] == "independent":
            assert r["tau"] == 2
            assert r["boundary"] == pytest.approx((1 + 1 / 1.5) / 2)
        else:
            assert r["tau"] == 1
            assert r["boundary"] == pytest.approx(1 / 1.5)


def test_dichotomy_scan_guards():
    law_wide = TailLaw(alpha=3.0, beta=1.0)
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=1000), law_wide,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    with pytest.raises(ValueError):
        dichotomy_scan(model, 1.0, [0.8])  # alpha >= 2p
    law = TailLaw(alpha=1.5, beta=1.0)
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=1000), law,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    with pytest.raises(ValueError):
        dichotomy_scan(model, 1.0, [2 / 3 + 0.005])  # inside the margin


def _poisson_patterns(rng, reps=120, lam=8.0):
    pats = []
    for _ in range(reps):
        k = rng.poisson(lam)
        times = rng.random(k)
        marks = np.column_stack([rng.pareto(1.5, k) + 1.0])
        pats.append(PointPattern(times, marks, 1.0, 1.0, 1.0, 0, 1000))
    return pats


def test_poisson_diagnostics_accepts_poisson_counts():
    rng = np.random.default_rng(3)
    pats = _poisson_patterns(rng)
    rep = poisson_diagnostics(pats, [(0.0, 0.5, 0, 1.0), (0.5, 1.0, 0, 1.0)])
    assert all(rep["dispersion_ok"])
    assert rep["max_abs_cross_correlation"] < 4 * rep["correlation_se"]


def test_poisson_diagnostics_negative_control_light_tails():
    # exponential-tailed marks are NOT regularly varying: with the Pareto
    # mean measure the expected count at a high level is far exceeded by
    # the prediction, which the harness flags via the mean-count check
    rng = np.random.default_rng(4)
    pats = []
    n = 1000
    for _ in range(80):
        marks = rng.standard_exponential(n) / np.log(n)  # a_n-style scaling
        keep = marks > 1.0
        pats.append(
            PointPattern(np.linspace(0, 1, n)[keep], marks[keep, None], 1.0, 1.0, 1.0, 0, n)
        )
    rep = poisson_diagnostics(pats, [(0.0, 1.0, 0, 1.0)])
    lam_pareto = 1.0  # u^-alpha at u = 1
    assert rep["mean_counts"][0] < 0.25 * lam_pareto or rep["low_expected"][0]


def test_no_common_jump_monotone():
    rng = np.random.default_rng(5)
    by_n = {}
    for i, n in enumerate((2**10, 2**12, 2**14)):
        pats = []
        for _ in range(30):
            k = 40
            marks = np.zeros((k, 3))
            marks[:, 0] = 2.0
            # multi-coordinate exceedances thin out as n grows
            dbl = rng.random(k) < 0.2 / (i + 1) ** 2
            marks[dbl, 1] = 2.0
            marks[dbl, 2] = 2.0
            pats.append(PointPattern(rng.random(k), marks, 1.0, 1.0, 1.0, 2, n))
        by_n[n] = pats
    rep = no_common_jump_test(by_n, bound=0.2)
    assert rep["monotone_decreasing"]
    assert rep["final_below_bound"]
