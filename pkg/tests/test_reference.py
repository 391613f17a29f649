import math

import numpy as np
import pytest
from scipy import stats as sps

from lmsvlab.gaussian import LongMemorySpec
from lmsvlab.model import sigma_pow, VolatilityFn
from lmsvlab.reference import (
    StableLaw,
    hermite_marginal_std,
    long_run_variance,
    sample_brownian_marginal,
    sample_hermite_marginal,
    sample_stable,
    stable_from_uniforms,
)


def test_stable_gaussian_boundary():
    rng = np.random.default_rng(0)
    x = sample_stable(StableLaw(2.0, 0.0, scale=1.5), rng, 200_000)
    assert np.var(x) == pytest.approx(2 * 1.5**2, rel=0.02)
    assert sps.kstest((x / (1.5 * math.sqrt(2))), "norm").pvalue > 0.01


def test_stable_cauchy_and_positive_branch():
    rng = np.random.default_rng(1)
    x = sample_stable(StableLaw(1.0, 0.0, location=3.0), rng, 100_000)
    assert np.median(x) == pytest.approx(3.0, abs=0.05)
    pos = sample_stable(StableLaw(0.75, 1.0), rng, 100_000)
    assert np.min(pos) > 0.0  # totally skewed, index < 1: positive support


def test_stable_tail_index_slope():
    rng = np.random.default_rng(2)
    alpha = 1.5
    x = np.abs(sample_stable(StableLaw(alpha, 0.3), rng, 10**6))
    top = np.sort(x)[-10_000:]
    tail_p = np.arange(len(top), 0, -1) / len(x)
    slope = np.polyfit(np.log(top), np.log(tail_p), 1)[0]
    assert abs(-slope - alpha) < 0.1


def test_stable_matches_scipy_parameterization():
    rng = np.random.default_rng(3)
    for a, b in ((1.5, 0.5), (0.8, -1.0), (1.0, 0.4)):
        x = sample_stable(StableLaw(a, b), rng, 30_000)
        y = sps.levy_stable.rvs(a, b, size=30_000, random_state=rng)
        assert sps.ks_2samp(x, y).pvalue > 0.001


def test_stable_from_uniforms_deterministic():
    x1 = stable_from_uniforms(1.5, 0.5, 0.3, 1.2)
    x2 = stable_from_uniforms(1.5, 0.5, 0.3, 1.2)
    assert x1 == x2


def test_hermite_marginal_tau1_gaussian():
    rng = np.random.default_rng(4)
    h = 0.85
    x = sample_hermite_marginal(1, h, t=1.0, size=1200, rng=rng, n_internal=2**13)
    want_sd = hermite_marginal_std(1, h)
    assert np.std(x) == pytest.approx(want_sd, rel=0.12)
    assert sps.normaltest(x).pvalue > 0.01
    assert sample_hermite_marginal(1, h, t=0.0, size=5, rng=rng)[0] == 0.0


def test_hermite_marginal_tau2_rosenblatt_skew():
    rng = np.random.default_rng(5)
    skews = []
    for n_int in (2**12, 2**14):
        x = sample_hermite_marginal(2, 0.9, size=800, rng=rng, n_internal=n_int)
        skews.append(sps.skew(x))
        assert sps.skewtest(x).pvalue < 0.01 and sps.skew(x) > 0
    # stable across internal resolutions
    assert abs(skews[0] - skews[1]) < 0.6


def test_hermite_marginal_self_similarity():
    rng = np.random.default_rng(6)
    tau, h = 1, 0.8
    a = sample_hermite_marginal(tau, h, t=1.0, size=1500, rng=rng, n_internal=2**12)
    b = sample_hermite_marginal(tau, h, t=0.5, size=1500, rng=rng, n_internal=2**12)
    want = 2.0 ** (1.0 - tau * (1.0 - h))
    got = sps.iqr(a) / sps.iqr(b)
    assert abs(got - want) / want < 0.1


def test_hermite_marginal_regime_guard():
    with pytest.raises(ValueError):
        sample_hermite_marginal(2, 0.7, size=1)  # tau(1-H) >= 1/2


def test_brownian_marginal():
    rng = np.random.default_rng(7)
    x = sample_brownian_marginal(1.0, 1.0, rng, 100_000)
    assert sps.kstest(x, "norm").pvalue > 0.01
    assert np.all(sample_brownian_marginal(2.0, 0.0, rng, 4) == 0.0)
    with pytest.raises(ValueError):
        sample_brownian_marginal(-1.0, 1.0, rng)


def test_long_run_variance_matches_simulation():
    # short-memory driver, G = sigma: compare the Hermite-series long-run
    # variance with the variance of simulated partial sums
    spec = LongMemorySpec(coeff_law="exponential", decay=0.4, truncation_m=60)
    fn = VolatilityFn.exp()
    g = lambda x: sigma_pow(fn, x, 1.0)
    var_lr = long_run_variance(spec, g, max_lag=2000)
    from lmsvlab.gaussian import simulate_path

    n, reps = 2**13, 200
    sums = np.empty(reps)
    for r in range(reps):
        x = simulate_path(spec, n, 50 + r).values
        sums[r] = np.sum(g(x) - math.exp(0.5))
    got = np.var(sums) / n
    assert abs(got - var_lr) / var_lr < 0.1
