import math

import numpy as np
import pytest
from scipy import stats as sps

from lmsvlab.gaussian import LongMemorySpec, MemoryBudgetError
from lmsvlab.model import (
    SvModel,
    SvPath,
    VolatilityFn,
    sample_marginal,
    sample_product_pairs,
    sigma_eval,
    simulate_sv,
)
from lmsvlab.tails import LeverageCoupling, TailLaw, quantile


LAW = TailLaw(alpha=1.5, beta=1.0)
IID = LongMemorySpec(coeff_law="explicit", coeffs=(1.0,))


def test_sigma_eval_examples():
    assert sigma_eval(VolatilityFn.exp(), 0.0) == 1.0
    assert sigma_eval(VolatilityFn.even_power(1), -3.0) == 9.0
    assert sigma_eval(VolatilityFn.poly(1.0, 1.0), 2.0) == 5.0
    assert VolatilityFn.constant(2.5).is_constant
    with pytest.raises(ValueError):
        VolatilityFn.poly(1.0, -1.0)
    ok, reason = VolatilityFn.exp().moment_condition()
    assert ok and reason


def test_sym_poly_subadditive_and_smooth():
    fn = VolatilityFn.poly(1.0, 0.5, 0.25)
    rng = np.random.default_rng(0)
    x, y, z = rng.normal(size=(3, 4000)) * 3.0
    s = lambda v: sigma_eval(fn, v)
    # subadditivity sigma(x+y) <= C (sigma(x) + sigma(y)): C = 2^(deg-1)
    # suffices for even polynomials with nonnegative coefficients
    big_c = 2.0 ** (2 * (len(fn.coeffs) - 1) - 1)
    assert np.all(s(x + y) <= big_c * (s(x) + s(y)) + 1e-9)
    # difference bound |sigma(x+y)-sigma(x+z)| <= C (s(x) v 1)((s(y) v 1)+(s(z) v 1))|y-z|
    lhs = np.abs(s(x + y) - s(x + z))
    rhs = (
        np.maximum(s(x), 1.0)
        * (np.maximum(s(y), 1.0) + np.maximum(s(z), 1.0))
        * np.abs(y - z)
    )
    assert np.all(lhs <= 60.0 * rhs + 1e-9)


def test_path_assembly_and_determinism():
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=500), LAW,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    p1 = simulate_sv(model, 200, 7)
    p2 = simulate_sv(model, 200, 7)
    np.testing.assert_array_equal(p1.y, p2.y)
    np.testing.assert_allclose(p1.y, p1.sigma * p1.z, rtol=0, atol=0)
    assert len(p1) == 200


def test_constant_sigma_gives_iid_shock_law():
    model = SvModel(IID, LAW, LeverageCoupling(), VolatilityFn.constant(1.0))
    path = simulate_sv(model, 50_000, 3)
    u = np.linspace(0.01, 0.99, 25)
    emp = np.quantile(path.y, u)
    theo = quantile(LAW, u)
    np.testing.assert_allclose(emp, theo, rtol=0.05)


def test_leverage_pairing_uses_same_index_innovation():
    # with sigma(x) = x^2 and Z = Z' (1 + 0.5 eta), Y_{i+1} depends on Z_i's
    # partner eta_i: corr(sign stats) must be visibly nonzero, while under
    # the independent coupling it is ~0
    gspec = LongMemorySpec(coeff_law="explicit", coeffs=(1.0,))
    mix = LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.9))
    m_lev = SvModel(gspec, LAW, mix, VolatilityFn.even_power(1))
    p = simulate_sv(m_lev, 200_000, 9)
    eta = p.eta_aligned()
    x_next = p.x[1:]
    # X_{i+1} = eta_i exactly for the degenerate one-coefficient driver
    np.testing.assert_allclose(x_next, eta[:-1], atol=1e-12)
    c = np.corrcoef(np.abs(p.z[:-1]), np.abs(x_next))[0, 1]
    assert abs(c) > 0.01


def test_exchangeability_hook_under_independence():
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=300), LAW,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    path = simulate_sv(model, 40_000, 21)
    rng = np.random.default_rng(4)
    perm = rng.permutation(len(path))
    shuffled = path.with_permuted_shocks(perm)
    res = sps.ks_2samp(path.y, shuffled.y)
    assert res.pvalue > 0.01
    np.testing.assert_allclose(shuffled.y, shuffled.sigma * shuffled.z)


def test_marginal_skewness_matches_beta():
    law = TailLaw(alpha=1.5, beta=0.7)
    model = SvModel(IID, law, LeverageCoupling(), VolatilityFn.exp())
    rng = np.random.default_rng(6)
    y = sample_marginal(model, rng, 10**6)
    a = np.abs(y)
    q = np.quantile(a, 0.999)
    exc = y[a > q]
    se = math.sqrt(0.7 * 0.3 / len(exc))
    assert abs(np.mean(exc > 0) - 0.7) < 3 * se


@pytest.mark.parametrize("leverage", [False, True], ids=["lmsv", "leverage"])
def test_no_clustering_of_large_values(leverage):
    # joint exceedances of the 99.9% quantile at lags 1..5 stay within 4
    # Poisson standard errors of the independent-case count n p^2
    n = 10**6
    law = TailLaw(alpha=1.0, beta=1.0)
    coupling = (
        LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.5))
        if leverage
        else LeverageCoupling()
    )
    sigma = VolatilityFn.even_power(1) if leverage else VolatilityFn.exp()
    model = SvModel(LongMemorySpec(hurst=0.7, truncation_m=10**5), law, coupling, sigma)
    path = simulate_sv(model, n, 13)
    a = np.abs(path.y)
    q = np.quantile(a, 0.999)
    exc = a > q
    expected = n * 1e-3 * 1e-3
    for h in range(1, 6):
        joint = int(np.count_nonzero(exc[:-h] & exc[h:]))
        assert abs(joint - expected) <= 4.0 * math.sqrt(expected) + 1.0


def test_breiman_marginal_tail_ratio():
    # P(Y > x)/P(Z > x) -> E[sigma^alpha] = e^{alpha^2/2} for sigma = exp
    alpha = 1.0
    law = TailLaw(alpha=alpha, beta=1.0)
    model = SvModel(IID, law, LeverageCoupling(), VolatilityFn.exp())
    path = simulate_sv(model, 10**6, 77)
    x = np.quantile(path.z, 0.9999)
    ratio = np.mean(path.y > x) / np.mean(path.z > x)
    assert abs(ratio - math.exp(alpha**2 / 2)) / math.exp(alpha**2 / 2) < 0.2


def test_product_pair_sampler_matches_path_moments():
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=2000),
        TailLaw(alpha=3.5, beta=1.0),
        LeverageCoupling(),
        VolatilityFn.exp(),
    )
    rng = np.random.default_rng(8)
    pairs = sample_product_pairs(model, 2, rng, 10**6)
    path = simulate_sv(model, 10**6, 123)
    prod = path.y[:-2] * path.y[2:]
    # alpha = 3.5 so the product has a finite mean; compare means
    assert np.mean(pairs) == pytest.approx(np.mean(prod), rel=0.05)


def test_exact_synthesis_rules():
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=2000), LAW,
        LeverageCoupling(kind="inverse_power"), VolatilityFn.exp(),
    )
    with pytest.raises(ValueError):
        simulate_sv(model, 100, 0, synthesis="exact")
    lmsv = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=2000), LAW,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    p = simulate_sv(lmsv, 100, 0, synthesis="exact")
    assert p.innovations.size == 0
    with pytest.raises(ValueError):
        p.eta_aligned()


def test_binary_cache_roundtrip(tmp_path):
    model = SvModel(IID, LAW, LeverageCoupling(), VolatilityFn.exp())
    path = simulate_sv(model, 64, 5)
    f = tmp_path / "path.bin"
    path.to_binary(str(f))
    back = SvPath.read_binary(str(f))
    np.testing.assert_array_equal(back["y"], path.y)
    np.testing.assert_array_equal(back["x"], path.x)
    assert back["header"]["provenance"] == model.provenance_hash()
    csv = tmp_path / "path.csv"
    path.to_csv(str(csv))
    data = np.loadtxt(str(csv), delimiter=",", skiprows=1)
    assert data.shape == (64, 5)


def test_budget_error_propagates(monkeypatch):
    monkeypatch.setenv("LMSV_LAB_BUDGET_BYTES", "100000")
    model = SvModel(
        LongMemorySpec(hurst=0.8, truncation_m=10**6), LAW,
        LeverageCoupling(), VolatilityFn.exp(),
    )
    with pytest.raises(MemoryBudgetError):
        simulate_sv(model, 10**5, 0)
