"""Stationary Gaussian drivers with prescribed short- or long-memory covariance.

The driver is a zero-mean, unit-variance causal moving average
``X_i = sum_{j=1..m} c_j eta_{i-j}`` of i.i.d. standard Gaussian innovations.
Three coefficient laws are supported:

* ``fractional``: ``c_j`` proportional to ``j**(hurst - 3/2)``, which gives a
  covariance decaying like ``lag**(2*hurst - 2)`` (long memory for
  ``hurst`` in (1/2, 1)),
* ``explicit``: a user-supplied finite coefficient list,
* ``exponential``: ``c_j`` proportional to ``exp(-decay*(j-1))``.

Coefficients are renormalized after truncation so that ``sum c_j**2 == 1``
exactly; the process variance is therefore always 1.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft
from scipy.special import betainc, beta as beta_fn

__all__ = [
    "LongMemorySpec",
    "GaussianPath",
    "MemoryBudgetError",
    "make_coefficients",
    "theoretical_covariance",
    "covariance_sequence",
    "simulate_path",
    "simulate_exact",
    "memory_budget_bytes",
]

# Largest truncation order for which the coefficient array is materialized.
# Beyond this, fractional-law covariances are evaluated by exact head sums
# plus an Euler-Maclaurin tail (no array, no simulation).
MATERIALIZE_MAX = 2**24

# Direct convolution below this op count, FFT above (design choice; the two
# are only required to agree statistically, not bitwise).
FFT_THRESHOLD_OPS = 10**8

_DEFAULT_BUDGET = 4 * 2**30


class MemoryBudgetError(RuntimeError):
    """Raised when a simulation would exceed the configured memory budget."""


def memory_budget_bytes() -> int:
    raw = os.environ.get("LMSV_LAB_BUDGET_BYTES")
    if raw is None:
        return _DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"LMSV_LAB_BUDGET_BYTES is not an integer: {raw!r}") from exc


@dataclass(frozen=True)
class LongMemorySpec:
    """Target covariance law for the Gaussian driver.

    ``hurst`` is required for the fractional law and must lie in (1/2, 1);
    ``hurst=None`` tags a short-memory spec (explicit or exponential laws,
    whose covariance is summable and vanishes beyond the truncation order).
    ``ell_const`` records the intended slowly-varying constant in
    ``cov(lag) ~ ell_const * lag**(2H-2)``; the realized constant is pinned
    by the unit-variance normalization and can be read off with
    :func:`realized_ell`.
    """

    coeff_law: str = "fractional"
    hurst: float | None = None
    truncation_m: int = 10**6
    ell_const: float = 1.0
    coeffs: tuple[float, ...] | None = None
    decay: float | None = None

    def __post_init__(self):
        if self.coeff_law not in ("fractional", "explicit", "exponential"):
            raise ValueError(f"unknown coeff_law: {self.coeff_law!r}")
        if self.truncation_m < 1:
            raise ValueError("truncation_m must be >= 1")
        if self.ell_const <= 0:
            raise ValueError("ell_const must be positive")
        if self.coeff_law == "fractional":
            if self.hurst is None or not (0.5 < self.hurst < 1.0):
                raise ValueError("fractional law requires hurst in (1/2, 1)")
        if self.coeff_law == "explicit":
            if not self.coeffs:
                raise ValueError("explicit law requires a nonempty coefficient list")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
            object.__setattr__(self, "truncation_m", len(self.coeffs))
        if self.coeff_law == "exponential" and self.decay is None:
            raise ValueError("exponential law requires a decay rate")

    @property
    def is_long_memory(self) -> bool:
        return self.coeff_law == "fractional"

    @property
    def materializable(self) -> bool:
        return self.coeff_law != "fractional" or self.truncation_m <= MATERIALIZE_MAX

    def to_dict(self) -> dict:
        return {
            "coeff_law": self.coeff_law,
            "hurst": self.hurst,
            "truncation_m": self.truncation_m,
            "ell_const": self.ell_const,
            "coeffs": list(self.coeffs) if self.coeffs is not None else None,
            "decay": self.decay,
        }


@dataclass
class GaussianPath:
    """One realized driver path.

    ``innovations`` holds ``eta_{1-m} .. eta_n`` (length ``n + m``) so that
    downstream leverage couplings can align the shock ``Z_i`` with ``eta_i``
    exactly; it is empty for circulant synthesis, which has no MA form.
    """

    values: np.ndarray
    innovations: np.ndarray
    spec: LongMemorySpec
    seed: int
    max_clip: float = 0.0

    def __len__(self) -> int:
        return len(self.values)

    def eta_aligned(self) -> np.ndarray:
        """eta_1 .. eta_n, the innovations paired with same-index shocks."""
        if self.innovations.size == 0:
            raise ValueError("path has no innovations (exact synthesis)")
        m = self.innovations.size - self.values.size
        return self.innovations[m:]

    def to_csv(self, path: str) -> None:
        n = len(self.values)
        if self.innovations.size:
            eta = self.eta_aligned()
        else:
            eta = np.full(n, np.nan)
        out = np.column_stack([np.arange(1, n + 1), self.values, eta])
        np.savetxt(path, out, delimiter=",", header="index,x,eta", comments="")


def _check_budget(n: int, m: int) -> None:
    # float64 working set: innovations (n+m), coefficients (m), FFT scratch.
    est = 8 * (n + 3 * m) * 4
    budget = memory_budget_bytes()
    if est > budget:
        raise MemoryBudgetError(
            f"simulation of n={n} with truncation m={m} needs about {est:.2e} "
            f"bytes, over the budget {budget:.2e} (set LMSV_LAB_BUDGET_BYTES)"
        )


@lru_cache(maxsize=16)
def _coefficients_cached(spec: LongMemorySpec) -> np.ndarray:
    m = spec.truncation_m
    if spec.coeff_law == "explicit":
        c = np.asarray(spec.coeffs, dtype=float)
        if not np.any(c != 0.0):
            raise ValueError("explicit coefficients are all zero")
    elif spec.coeff_law == "exponential":
        j = np.arange(m, dtype=float)
        with np.errstate(under="ignore"):
            c = np.exp(-spec.decay * j)
    else:
        if not spec.materializable:
            raise MemoryBudgetError(
                f"truncation_m={spec.truncation_m} too large to materialize; "
                "covariances remain available analytically"
            )
        j = np.arange(1, m + 1, dtype=float)
        c = j ** (spec.hurst - 1.5)
    c = c / math.sqrt(float(np.dot(c, c)))
    c.flags.writeable = False
    return c


def make_coefficients(spec: LongMemorySpec) -> np.ndarray:
    """Normalized MA coefficients ``c_1 .. c_m`` with ``sum c_j**2 == 1``."""
    return _coefficients_cached(spec)


def _frac_sum(a: float, lag: float, m: float, head: int = 20000) -> float:
    """sum_{j=1..m} j**a * (j+lag)**a, exact head + Euler-Maclaurin tail.

    The tail integral has the closed form
    ``lag**(2a+1) * [B(z; a+1, -2a-1)]`` with ``z = x/(x+lag)``, valid for
    ``a in (-1, -1/2)`` which covers hurst in (1/2, 1).
    """
    m = float(m)
    j0 = min(head, int(m))
    j = np.arange(1, j0 + 1, dtype=float)
    s = float(np.sum(j**a * (j + lag) ** a))
    if m <= head:
        return s

    def g(x):
        return x**a * (x + lag) ** a

    def gp(x):
        return a * x ** (a - 1.0) * (x + lag) ** a + a * x**a * (x + lag) ** (a - 1.0)

    p, q = a + 1.0, -2.0 * a - 1.0
    if lag == 0.0:
        integral = (m ** (2 * a + 1) - j0 ** (2 * a + 1)) / (2 * a + 1)
    else:
        z0 = j0 / (j0 + lag)
        z1 = m / (m + lag)
        integral = lag ** (2 * a + 1) * beta_fn(p, q) * (betainc(p, q, z1) - betainc(p, q, z0))
    tail = integral + 0.5 * (g(j0) + g(m)) + (gp(m) - gp(j0)) / 12.0
    return s - g(j0) + tail


@lru_cache(maxsize=64)
def _frac_norm(spec: LongMemorySpec) -> float:
    a = spec.hurst - 1.5
    return _frac_sum(a, 0.0, spec.truncation_m)


def theoretical_covariance(spec: LongMemorySpec, lag: int) -> float:
    """cov(X_0, X_lag) = sum_j c_j c_{j+lag} over the truncated support."""
    if lag < 0:
        raise ValueError("lag must be >= 0")
    if lag == 0:
        return 1.0
    if lag >= spec.truncation_m:
        return 0.0
    if spec.coeff_law == "fractional" and not spec.materializable:
        a = spec.hurst - 1.5
        return _frac_sum(a, float(lag), spec.truncation_m - float(lag)) / _frac_norm(spec)
    c = make_coefficients(spec)
    return float(np.dot(c[: len(c) - lag], c[lag:]))


def covariance_sequence(spec: LongMemorySpec, nlags: int) -> np.ndarray:
    """cov(X_0, X_k) for k = 0 .. nlags, as one array."""
    if spec.coeff_law == "fractional" and not spec.materializable:
        a = spec.hurst - 1.5
        norm = _frac_norm(spec)
        lags = np.arange(1, nlags + 1, dtype=float)
        out = np.empty(nlags + 1)
        out[0] = 1.0
        out[1:] = _frac_sum_batch(a, lags, float(spec.truncation_m)) / norm
        return out
    c = make_coefficients(spec)
    m = len(c)
    k = min(nlags, m - 1)
    size = 1 << int(np.ceil(np.log2(m + k + 1)))
    spec_fft = np.fft.rfft(c, size)
    acf = np.fft.irfft(spec_fft * np.conj(spec_fft), size)[: k + 1]
    out = np.zeros(nlags + 1)
    out[: k + 1] = acf
    out[0] = 1.0
    return out


def _frac_sum_batch(a: float, lags: np.ndarray, m: float, head: int = 8192) -> np.ndarray:
    """Vectorized `_frac_sum` over many lags (upper limit m - lag each)."""
    j = np.arange(1, head + 1, dtype=float)
    ja = j**a
    out = np.empty(len(lags))
    chunk = max(1, int(2e7) // head)
    for lo in range(0, len(lags), chunk):
        L = lags[lo : lo + chunk][:, None]
        out[lo : lo + chunk] = np.sum(ja[None, :] * (j[None, :] + L) ** a, axis=1)
    uppers = m - lags
    small = uppers <= head
    for i in np.nonzero(small)[0]:
        jj = np.arange(1, int(uppers[i]) + 1, dtype=float)
        out[i] = float(np.sum(jj**a * (jj + lags[i]) ** a))
    big = ~small
    if np.any(big):
        L = lags[big]
        upper = uppers[big]
        j0 = float(head)
        p, q = a + 1.0, -2.0 * a - 1.0
        z0 = j0 / (j0 + L)
        z1 = upper / (upper + L)
        integral = L ** (2 * a + 1) * beta_fn(p, q) * (betainc(p, q, z1) - betainc(p, q, z0))

        def g(x):
            return x**a * (x + L) ** a

        def gp(x):
            return a * x ** (a - 1.0) * (x + L) ** a + a * x**a * (x + L) ** (a - 1.0)

        out[big] += -g(j0) + integral + 0.5 * (g(j0) + g(upper)) + (gp(upper) - gp(j0)) / 12.0
    return out


def realized_ell(spec: LongMemorySpec, lag: int = 10**4) -> float:
    """Realized constant cov(lag) / lag**(2H-2) of a long-memory spec."""
    if not spec.is_long_memory:
        raise ValueError("realized_ell is defined for fractional specs only")
    return theoretical_covariance(spec, lag) * lag ** (2.0 - 2.0 * spec.hurst)


def _as_seed(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@lru_cache(maxsize=4)
def _kernel_rfft(spec: LongMemorySpec, size: int) -> np.ndarray:
    out = rfft(make_coefficients(spec), size)
    out.flags.writeable = False
    return out


def simulate_path(spec: LongMemorySpec, n: int, seed) -> GaussianPath:
    """Simulate X_1..X_n by convolving i.i.d. N(0,1) innovations with c.

    Deterministic given (spec, n, seed). The ``m`` burn-in innovations that
    precede the sample are kept so that shocks can be paired with the
    same-index innovation downstream. Direct convolution below the op
    threshold, FFT convolution (with the kernel transform cached per spec)
    above; the two agree statistically, not bitwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c = make_coefficients(spec)
    m = len(c)
    _check_budget(n, m)
    rng = np.random.default_rng(_as_seed(seed))
    eta = rng.standard_normal(n + m)
    if n * m <= FFT_THRESHOLD_OPS:
        x = np.convolve(eta, c, mode="valid")[:n]
    else:
        size = next_fast_len(n + 2 * m - 1)
        x = irfft(rfft(eta, size) * _kernel_rfft(spec, size), size)[m - 1 : m - 1 + n]
    sd = seed if isinstance(seed, (int, np.integer)) else -1
    return GaussianPath(values=x, innovations=eta, spec=spec, seed=int(sd))


def circulant_spectrum(spec: LongMemorySpec, n: int) -> tuple[np.ndarray, float]:
    """Eigenvalues of the circulant embedding of cov(0..n), and max clip.

    The circulant first row is ``[rho_0 .. rho_n, rho_{n-1} .. rho_1]``; its
    FFT is real. Negative eigenvalues (possible for some covariances) are
    reported via the second return value and clipped by the sampler.
    """
    rho = covariance_sequence(spec, n)
    row = np.concatenate([rho, rho[-2:0:-1]])
    eigs = np.fft.fft(row).real
    max_clip = float(max(0.0, -eigs.min()))
    return eigs, max_clip


@lru_cache(maxsize=8)
def _circulant_sqrt_eigs(spec: LongMemorySpec, n: int) -> tuple[np.ndarray, float]:
    eigs, max_clip = circulant_spectrum(spec, n)
    if max_clip > 0.0:
        eigs = np.clip(eigs, 0.0, None)
    coeff = np.sqrt(eigs / len(eigs))
    coeff.flags.writeable = False
    return coeff, max_clip


def simulate_exact(spec: LongMemorySpec, n: int, seed) -> GaussianPath:
    """Circulant-embedding synthesis matching the spec covariance exactly.

    Cross-check oracle for :func:`simulate_path`; no innovations are
    retained. Negative circulant eigenvalues are clipped to zero with a
    warning, and the largest clipped magnitude is recorded on the path.

    With ``lam_k`` the circulant eigenvalues and ``W_k`` i.i.d. standard
    complex Gaussians, ``Re FFT(sqrt(lam/M) W)`` has exactly the circulant
    covariance, so its first ``n`` entries have covariance ``rho``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_budget(8 * n, 0)
    coeff, max_clip = _circulant_sqrt_eigs(spec, n)
    if max_clip > 0.0:
        warnings.warn(
            f"circulant spectrum had negative eigenvalues (max magnitude "
            f"{max_clip:.3e}); clipped to zero",
            RuntimeWarning,
        )
    rng = np.random.default_rng(_as_seed(seed))
    m2 = len(coeff)
    w = rng.standard_normal(m2) + 1j * rng.standard_normal(m2)
    x = np.fft.fft(coeff * w)[:n].real
    sd = seed if isinstance(seed, (int, np.integer)) else -1
    return GaussianPath(
        values=x,
        innovations=np.empty(0),
        spec=spec,
        seed=int(sd),
        max_clip=max_clip,
    )
