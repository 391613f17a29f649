import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from lmsvlab.tails import (
    LeverageCoupling,
    TailLaw,
    abs_tail,
    conditional_abs_moment,
    conditional_mean,
    coupled_abs_moment,
    coupled_mean,
    mean,
    moment,
    potter_bound_check,
    quantile,
    sample,
    sample_pair,
    sample_shocks,
    tail_function,
)


def test_pareto_quantile_median_one_sided():
    law = TailLaw(alpha=1.5, beta=1.0)
    assert quantile(law, 0.5) == pytest.approx(2 ** (1 / 1.5), rel=1e-14)


def test_tail_function_balanced():
    law = TailLaw(alpha=2.0, beta=0.5)
    p_r, p_l = tail_function(law, 2.0)
    assert p_r == pytest.approx(0.125, abs=1e-15)
    assert p_l == pytest.approx(0.125, abs=1e-15)
    # at the support edge the two tails exhaust the mass
    p_r, p_l = tail_function(law, 1.0)
    assert p_r + p_l == pytest.approx(1.0, abs=1e-15)
    one_sided = TailLaw(alpha=2.0, beta=1.0)
    _, p_l = tail_function(one_sided, 3.7)
    assert p_l == 0.0


def test_moment_closed_forms():
    law = TailLaw(alpha=1.5, beta=1.0)
    assert moment(law, 1.0) == pytest.approx(3.0, rel=1e-14)
    assert moment(law, 1.5) == math.inf
    assert moment(law, 1e-9) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        moment(law, 0.0)


def test_centered_law_has_zero_mean():
    law = TailLaw(alpha=1.5, beta=0.75, centered=True)
    assert mean(law) == 0.0
    rng = np.random.default_rng(0)
    z = sample(law, rng, 400_000)
    # alpha = 1.5: the sample mean fluctuates at n^(1/alpha - 1) scale
    assert abs(np.mean(z)) < 0.15
    # exact tail function matches the empirical tail
    for x in (2.0, 5.0):
        p_r, p_l = tail_function(law, x)
        assert np.mean(z > x) == pytest.approx(p_r, abs=4e-3)
        assert np.mean(z < -x) == pytest.approx(p_l, abs=4e-3)
    with pytest.raises(ValueError):
        TailLaw(alpha=0.9, centered=True)


def test_centered_moment_quadrature():
    law = TailLaw(alpha=1.8, beta=1.0, centered=True)
    rng = np.random.default_rng(3)
    z = sample(law, rng, 2_000_000)
    assert moment(law, 1.0) == pytest.approx(np.mean(np.abs(z)), rel=0.02)


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(0.5, 3.0),
    beta=st.floats(0.0, 1.0),
    u=st.floats(1e-6, 1 - 1e-6),
)
def test_quantile_tail_roundtrip_property(alpha, beta, u):
    law = TailLaw(alpha=alpha, beta=beta)
    z = quantile(law, u)
    if z > 0:
        p_r, _ = tail_function(law, z)
        assert p_r == pytest.approx(1.0 - u, rel=1e-9, abs=1e-12)
    elif z < 0:
        _, p_l = tail_function(law, -z)
        # P(Z < z) = u and the law has no atoms
        assert p_l == pytest.approx(u, rel=1e-9, abs=1e-12)


def test_sample_pair_contracts():
    law = TailLaw(alpha=1.5, beta=1.0)
    indep = LeverageCoupling()
    assert sample_pair(law, indep, 123.456, 0.5) == pytest.approx(2 ** (1 / 1.5))
    inv = LeverageCoupling(kind="inverse_power", u_law="one")
    assert sample_pair(law, inv, 1.0, 0.77) == pytest.approx(1.0)
    assert sample_pair(law, inv, 0.0, 0.5) > 0  # eta=0 clamped, not an error
    mix = LeverageCoupling(kind="polynomial_mix", psi1=(1.0,), psi2=(0.0,))
    assert sample_pair(law, mix, -2.0, 0.5) == pytest.approx(quantile(law, 0.5))


def test_potter_bound():
    law = TailLaw(alpha=1.5, beta=1.0)
    # y <= 1: the bound holds with C = 1
    rep = potter_bound_check(
        law, 0.1, np.geomspace(1, 1e4, 13), np.geomspace(1e-3, 1.0, 7)
    )
    assert rep["ok"]
    # y = 2: ratio is exactly 2^alpha for x >= 2*x_min
    x = np.array([3.0, 10.0, 100.0])
    ratio = abs_tail(law, x / 2.0) / abs_tail(law, x)
    np.testing.assert_allclose(ratio, 2**1.5, rtol=1e-12)
    rep = potter_bound_check(law, 0.05, np.geomspace(1, 1e6, 25), np.geomspace(0.01, 1e3, 25))
    assert rep["ok"] and rep["max_quotient"] <= 1.0 + 1e-9


@pytest.mark.parametrize(
    "coupling",
    [
        LeverageCoupling(),
        LeverageCoupling(kind="inverse_power"),
        LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.5)),
    ],
    ids=["independent", "inverse_power", "polynomial_mix"],
)
def test_empirical_tail_index_and_balance(coupling):
    alpha, beta = 1.5, 1.0 if coupling.kind == "independent" else None
    law = TailLaw(alpha=alpha, beta=0.7)
    rng = np.random.default_rng(17)
    eta = rng.standard_normal(10**6)
    z = sample_shocks(law, coupling, eta, rng)
    a = np.abs(z)
    # log-log regression over the top 1%
    top = np.sort(a)[-10_000:]
    tail_p = np.arange(len(top), 0, -1) / len(a)
    slope = np.polyfit(np.log(top), np.log(tail_p), 1)[0]
    assert abs(-slope - alpha) < 0.1
    if coupling.kind == "independent":
        # balance: fraction of positive exceedances above the 99.9% quantile
        q = np.quantile(a, 0.999)
        exc = z[a > q]
        frac = np.mean(exc > 0)
        se = math.sqrt(0.7 * 0.3 / len(exc))
        assert abs(frac - 0.7) < 3 * se


def test_tail_equivalence_bounded_factor():
    # Z g(Z) is tail equivalent to Z with constant c_g^alpha
    alpha, c_g = 1.5, 2.0
    law = TailLaw(alpha=alpha, beta=1.0)
    rng = np.random.default_rng(5)
    z = sample(law, rng, 4 * 10**6)
    g = c_g * z / (1.0 + z)  # bounded, -> c_g at infinity
    w = z * g
    x = np.quantile(z, 0.9999)
    ratio = np.mean(w > x) / np.mean(z > x)
    assert abs(ratio - c_g**alpha) / c_g**alpha < 0.2


def test_conditional_moments_against_mc():
    law = TailLaw(alpha=1.5, beta=1.0)
    mix = LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.5), psi2=(0.2,))
    rng = np.random.default_rng(9)
    for eta in (-1.3, 0.4, 2.0):
        z = sample_pair(law, mix, np.full(10**6, eta), rng.random(10**6))
        want = conditional_abs_moment(law, mix, 1.0, eta)[0]
        assert np.mean(np.abs(z)) == pytest.approx(want, rel=0.02)
        want_m = conditional_mean(law, mix, eta)[0]
        assert np.mean(z) == pytest.approx(want_m, rel=0.05)


def test_coupled_moments():
    law = TailLaw(alpha=1.5, beta=1.0)
    mix = LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.5))
    rng = np.random.default_rng(11)
    eta = rng.standard_normal(2 * 10**6)
    z = sample_shocks(law, mix, eta, rng)
    assert coupled_abs_moment(law, mix, 1.0) == pytest.approx(
        np.mean(np.abs(z)), rel=0.02
    )
    assert coupled_mean(law, mix) == pytest.approx(np.mean(z), abs=0.12)
    # E[eta |Z|] != 0 for this mix: the leverage channel that flips the
    # covariance dichotomy
    x, w = np.polynomial.legendre.leggauss(200)
    inv = LeverageCoupling(kind="inverse_power")
    assert coupled_abs_moment(law, inv, 1.0) == pytest.approx(
        np.mean(np.abs(sample_shocks(law, inv, eta, rng))), rel=0.02
    )
    assert coupled_mean(law, inv) == 0.0
    assert moment(law, 1.0) == coupled_abs_moment(law, LeverageCoupling(), 1.0)


def test_stable_family_tail_and_sampling():
    law = TailLaw(alpha=1.3, beta=0.5, family="stable", skew=0.0)
    rng = np.random.default_rng(2)
    z = sample(law, rng, 200_000)
    p_r, p_l = tail_function(law, 5.0)
    assert np.mean(z > 5.0) == pytest.approx(p_r, rel=0.1)
    assert np.mean(z < -5.0) == pytest.approx(p_l, rel=0.1)
