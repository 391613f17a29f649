import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmsvlab.gaussian import (
    LongMemorySpec,
    MemoryBudgetError,
    circulant_spectrum,
    covariance_sequence,
    make_coefficients,
    realized_ell,
    simulate_exact,
    simulate_path,
    theoretical_covariance,
)
from lmsvlab.gaussian import _frac_sum


def test_explicit_normalization_345():
    spec = LongMemorySpec(coeff_law="explicit", coeffs=(3, 4))
    np.testing.assert_allclose(make_coefficients(spec), [0.6, 0.8], rtol=1e-15)


def test_fractional_two_coefficients():
    spec = LongMemorySpec(hurst=0.9, truncation_m=2)
    c = make_coefficients(spec)
    raw = np.array([1.0, 2.0 ** (-0.6)])
    np.testing.assert_allclose(c, raw / np.sqrt(np.sum(raw**2)), rtol=1e-14)
    assert c[0] > c[1] > 0  # monotone nonincreasing


def test_exponential_fast_decay_degenerates_to_iid():
    spec = LongMemorySpec(coeff_law="exponential", decay=200.0, truncation_m=5)
    c = make_coefficients(spec)
    np.testing.assert_allclose(c, [1, 0, 0, 0, 0], atol=1e-80)


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        LongMemorySpec(hurst=0.4)
    with pytest.raises(ValueError):
        LongMemorySpec(hurst=1.0)
    with pytest.raises(ValueError):
        LongMemorySpec(coeff_law="explicit", coeffs=())
    with pytest.raises(ValueError):
        LongMemorySpec(coeff_law="exponential")


@settings(max_examples=30, deadline=None)
@given(
    law=st.sampled_from(["fractional", "exponential"]),
    hurst=st.floats(0.55, 0.95),
    decay=st.floats(0.01, 3.0),
    m=st.integers(1, 400),
)
def test_unit_variance_normalization_property(law, hurst, decay, m):
    if law == "fractional":
        spec = LongMemorySpec(hurst=hurst, truncation_m=m)
    else:
        spec = LongMemorySpec(coeff_law="exponential", decay=decay, truncation_m=m)
    c = make_coefficients(spec)
    assert abs(np.sum(c * c) - 1.0) < 1e-12
    assert theoretical_covariance(spec, 0) == 1.0


def test_covariance_explicit_pair():
    spec = LongMemorySpec(coeff_law="explicit", coeffs=(3, 4))
    assert theoretical_covariance(spec, 1) == pytest.approx(0.48, abs=1e-15)
    assert theoretical_covariance(spec, 2) == 0.0  # beyond support
    # short memory: absolutely summable, zero past the truncation order
    rho = covariance_sequence(spec, 10)
    assert np.all(rho[2:] == 0.0)
    assert np.isfinite(np.sum(np.abs(rho)))


def test_fractional_covariance_follows_power_law():
    spec = LongMemorySpec(hurst=0.9, truncation_m=10**5)
    # fit the constant on a dyadic grid around the target lag
    lags = np.array([250, 500, 1000, 2000, 4000])
    vals = np.array([theoretical_covariance(spec, int(l)) for l in lags])
    const = np.exp(np.mean(np.log(vals) - (2 * 0.9 - 2) * np.log(lags)))
    assert abs(vals[2] / (const * 1000 ** (-0.2)) - 1.0) < 0.03
    assert np.all(vals > 0)


def test_euler_maclaurin_matches_brute_force():
    a = 0.9 - 1.5
    for lag, m in ((17.0, 60000), (500.0, 123456)):
        j = np.arange(1, int(m) + 1, dtype=float)
        brute = float(np.sum(j**a * (j + lag) ** a))
        assert _frac_sum(a, lag, m) == pytest.approx(brute, rel=1e-10)


def test_huge_truncation_uses_analytic_path():
    spec = LongMemorySpec(hurst=0.8, truncation_m=10**10)
    v = theoretical_covariance(spec, 1000)
    assert 0 < v < 1
    # at short lags the huge-m law differs from a materialized m=2^22 law
    # only through the ~0.2% normalization shift of the coefficient tail
    small = LongMemorySpec(hurst=0.8, truncation_m=2**22)
    v_small = theoretical_covariance(small, 10)
    v_huge = theoretical_covariance(spec, 10)
    assert v_huge == pytest.approx(v_small, rel=5e-3)
    # and the sequence is decreasing in lag
    vals = [theoretical_covariance(spec, l) for l in (10, 100, 1000, 10000)]
    assert all(a > b > 0 for a, b in zip(vals, vals[1:]))


def test_covariance_sequence_consistent_with_single_lag():
    spec = LongMemorySpec(hurst=0.75, truncation_m=5000)
    rho = covariance_sequence(spec, 64)
    for lag in (1, 7, 64):
        assert rho[lag] == pytest.approx(theoretical_covariance(spec, lag), rel=1e-10)


def test_simulate_path_deterministic_and_iid_case():
    spec = LongMemorySpec(coeff_law="explicit", coeffs=(1.0,))
    p1 = simulate_path(spec, 64, 99)
    p2 = simulate_path(spec, 64, 99)
    assert np.array_equal(p1.values, p2.values)
    assert np.array_equal(p1.innovations, p2.innovations)
    # m=1: X_i = eta_{i-1}
    np.testing.assert_allclose(p1.values, p1.innovations[:-1], rtol=0, atol=0)


def test_path_lag1_autocorrelation_near_048():
    spec = LongMemorySpec(coeff_law="explicit", coeffs=(0.6, 0.8))
    p = simulate_path(spec, 10**5, 123)
    x = p.values
    acf1 = np.mean(x[:-1] * x[1:])
    assert abs(acf1 - 0.48) < 0.02
    assert abs(np.var(x) - 1.0) < 0.05


def test_eta_alignment_window():
    spec = LongMemorySpec(coeff_law="explicit", coeffs=(0.6, 0.8))
    p = simulate_path(spec, 50, 5)
    assert p.innovations.size == 52
    assert p.eta_aligned().size == 50
    # X_1 = 0.6 eta_0 + 0.8 eta_{-1}
    assert p.values[0] == pytest.approx(
        0.6 * p.innovations[1] + 0.8 * p.innovations[0], rel=1e-12
    )


def test_simulate_exact_basics():
    spec = LongMemorySpec(coeff_law="explicit", coeffs=(1.0,))
    one = simulate_exact(spec, 1, 3)
    assert one.values.shape == (1,)
    assert one.innovations.size == 0
    eigs, clip = circulant_spectrum(spec, 16)
    np.testing.assert_allclose(eigs, 1.0, atol=1e-12)  # white noise: flat spectrum
    assert clip == 0.0
    p1 = simulate_exact(spec, 100, 11)
    p2 = simulate_exact(spec, 100, 11)
    assert np.array_equal(p1.values, p2.values)


def test_circulant_spectrum_mean_is_one():
    for spec in (
        LongMemorySpec(hurst=0.9, truncation_m=20000),
        LongMemorySpec(coeff_law="explicit", coeffs=(3, 4)),
        LongMemorySpec(coeff_law="exponential", decay=0.5, truncation_m=64),
    ):
        eigs, _ = circulant_spectrum(spec, 256)
        assert abs(np.mean(eigs) - 1.0) < 1e-9


def test_exact_sampler_acf_matches_covariance():
    spec = LongMemorySpec(hurst=0.9, truncation_m=2**16)
    n, reps = 2**12, 48
    lags = np.array([1, 5, 20, 60, 100])
    rho = np.array([theoretical_covariance(spec, int(l)) for l in lags])
    est = np.empty((reps, len(lags)))
    for r in range(reps):
        x = simulate_exact(spec, n, 1000 + r).values
        for j, l in enumerate(lags):
            est[r, j] = np.mean(x[: n - l] * x[l:])
    z = (est.mean(axis=0) - rho) / (est.std(axis=0, ddof=1) / np.sqrt(reps))
    assert np.all(np.abs(z) < 3.0)


def test_ma_and_exact_acfs_agree_when_truncation_mild():
    # H=0.7 with m=10^6: truncated and untruncated covariance differ by
    # less than 1e-3 at lags <= 50, so the two synthesizers must agree
    spec = LongMemorySpec(hurst=0.7, truncation_m=10**6)
    big = LongMemorySpec(hurst=0.7, truncation_m=10**10)
    for lag in (1, 25, 50):
        assert abs(
            theoretical_covariance(spec, lag) - theoretical_covariance(big, lag)
        ) < 1e-3
    n, reps = 2**13, 24
    lags = np.array([1, 10, 50])
    a = np.empty((reps, len(lags)))
    b = np.empty((reps, len(lags)))
    for r in range(reps):
        xm = simulate_path(spec, n, 300 + r).values
        xe = simulate_exact(spec, n, 900 + r).values
        for j, l in enumerate(lags):
            a[r, j] = np.mean(xm[: n - l] * xm[l:])
            b[r, j] = np.mean(xe[: n - l] * xe[l:])
    se = np.sqrt(a.var(axis=0, ddof=1) / reps + b.var(axis=0, ddof=1) / reps)
    z = (a.mean(axis=0) - b.mean(axis=0)) / se
    assert np.all(np.abs(z) < 4.0)


def test_memory_budget_enforced(monkeypatch):
    monkeypatch.setenv("LMSV_LAB_BUDGET_BYTES", "1000000")
    spec = LongMemorySpec(hurst=0.8, truncation_m=10**6)
    with pytest.raises(MemoryBudgetError):
        simulate_path(spec, 10**5, 0)


def test_realized_ell_positive():
    spec = LongMemorySpec(hurst=0.8, truncation_m=10**6)
    assert realized_ell(spec, 2000) > 0
