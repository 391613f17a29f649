"""Conditional-expectation kernels for products of the SV process.

For a lag s, split the driver state s steps ahead into three independent
pieces: the innovations strictly between now and then (std ``recent``),
the single innovation paired with the current shock (weight ``c_lag``),
and the remainder that is already known (std ``remote``, unit-variance
version denoted ``Xhat`` below, correlated with the current state X).
The conditional expectation of a product statistic given the past is then
a centered separable function K(X, Xhat):

* ``signed``   (products Y_0 Y_s):
  K(x, y) = m * sigma(x) * E[Z sigma(recent*zeta + c_lag*eta + remote*y)] - m*C
* ``lmsv``     (powers |Y_0 Y_s|^p, shocks independent of the driver):
  K(x, y) = m_p * sigma^p(x) * m_p E[sigma^p(...)] - m_p*C
* ``leverage`` (powers, coupled shocks):
  K(x, y) = m_p * sigma^p(x) * E[sigma^p(...) |Z|^p] - m_p*C

with C chosen so that E[K(X, Xhat)] = 0. The conditional moments of the
shock given its partner innovation enter through ``psi(eta)``; closed forms
are used for the exponential volatility and for polynomial volatilities of
integer total degree, with Gauss-Hermite quadrature as the general path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gaussian import LongMemorySpec, make_coefficients, theoretical_covariance
from .hermite import (
    SeparableFn,
    gauss_hermite,
    hermite_coefficients,
    HermiteRankReport,
)
from .model import SvModel, VolatilityFn, sigma_pow
from .tails import (
    conditional_abs_moment,
    conditional_mean,
    coupled_abs_moment,
    coupled_mean,
)

__all__ = [
    "KernelSpec",
    "KernelFn",
    "lag_decomposition",
    "build_kernel",
    "kernel_eval",
    "kernel_rank",
    "product_moment",
    "mc_conditional_moment",
]

_VARIANTS = ("signed", "lmsv", "leverage")


def lag_decomposition(spec: LongMemorySpec, lag: int) -> tuple[float, float, float, float]:
    """(c_lag, recent_std, remote_std, corr) for the three-way state split.

    recent_std^2 + c_lag^2 + remote_std^2 == 1 exactly (the coefficients are
    normalized), and corr = cov(X_0, Xhat) = rho_lag / remote_std.
    """
    if lag < 1:
        raise ValueError("lag must be >= 1")
    c = make_coefficients(spec)
    m = len(c)
    c_lag = float(c[lag - 1]) if lag <= m else 0.0
    recent2 = float(np.dot(c[: lag - 1], c[: lag - 1])) if lag > 1 else 0.0
    remote2 = max(0.0, 1.0 - recent2 - c_lag * c_lag)
    remote = math.sqrt(remote2)
    rho = theoretical_covariance(spec, lag)
    corr = rho / remote if remote > 0 else 0.0
    corr = min(1.0, max(-1.0, corr))
    return c_lag, math.sqrt(recent2), remote, corr


@dataclass(frozen=True)
class KernelSpec:
    """Kernel variant, power, lag, and the derived state-split constants."""

    variant: str
    p: float
    lag: int
    c_lag: float
    recent_std: float
    remote_std: float
    correlation: float

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown kernel variant: {self.variant!r}")
        if self.p <= 0:
            raise ValueError("p must be positive")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")

    @classmethod
    def from_model(cls, model: SvModel, variant: str, p: float, lag: int) -> "KernelSpec":
        c_lag, recent, remote, corr = lag_decomposition(model.gaussian, lag)
        return cls(
            variant=variant,
            p=p,
            lag=lag,
            c_lag=c_lag,
            recent_std=recent,
            remote_std=remote,
            correlation=corr,
        )


def default_variant(model: SvModel) -> str:
    return "lmsv" if model.is_lmsv else "leverage"


def _psi(model: SvModel, kspec: KernelSpec, eta: np.ndarray) -> np.ndarray:
    """Conditional shock moment given the partner innovation."""
    if kspec.variant == "signed":
        return np.asarray(conditional_mean(model.tail, model.coupling, eta))
    if kspec.variant == "lmsv":
        if not model.is_lmsv:
            raise ValueError("lmsv kernel requires the independent coupling")
        return np.full(np.shape(eta), coupled_abs_moment(model.tail, model.coupling, kspec.p))
    return np.asarray(conditional_abs_moment(model.tail, model.coupling, kspec.p, eta))


def _prefactor(model: SvModel, kspec: KernelSpec) -> float:
    """m (signed) or m_p (absolute powers) multiplying the whole kernel."""
    if kspec.variant == "signed":
        return coupled_mean(model.tail, model.coupling)
    m_p = coupled_abs_moment(model.tail, model.coupling, kspec.p)
    if not math.isfinite(m_p):
        raise ValueError(
            f"kernel undefined: E|Z|^p is infinite for p={kspec.p} >= alpha={model.tail.alpha}"
        )
    return m_p


def _poly_total_degree(fn: VolatilityFn, p: float) -> int | None:
    """Degree of sigma^p as a polynomial, or None if not a polynomial.

    sigma^p is a genuine polynomial only when the resulting power of x is
    even at every term: x**(2kp) needs k*p integral, and a general even
    polynomial needs integral p (otherwise sigma^p involves |x|).
    """
    if fn.kind == "exp":
        return None
    if fn.kind == "even_power":
        kp = fn.power * p
        if abs(kp - round(kp)) > 1e-12:
            return None
        return 2 * int(round(kp))
    if abs(p - round(p)) > 1e-12:
        return None
    return 2 * (len(fn.coeffs) - 1) * int(round(p))


def _sigma_pow_coeffs(fn: VolatilityFn, p: float) -> np.ndarray:
    """Coefficients of sigma(t)**p in powers of t (exact for integer degree)."""
    if fn.kind == "even_power":
        d = int(round(2 * fn.power * p))
        out = np.zeros(d + 1)
        out[d] = 1.0
        return out
    base = np.zeros(2 * (len(fn.coeffs) - 1) + 1)
    base[::2] = fn.coeffs
    ip = int(round(p))
    if abs(p - ip) > 1e-12:
        raise ValueError("polynomial expansion needs integer p for sym_poly")
    out = np.array([1.0])
    for _ in range(ip):
        out = np.polynomial.polynomial.polymul(out, base)
    return out


@lru_cache(maxsize=64)
def _psi_eta_moments(model: SvModel, kspec: KernelSpec, dmax: int) -> np.ndarray:
    """mu_d = E[eta^d psi(eta)], d = 0..dmax, by Gauss-Hermite quadrature."""
    order = 300 if model.coupling.kind == "inverse_power" else 200
    x, w = gauss_hermite(order)
    psi = _psi(model, kspec, x)
    return np.array([float(np.dot(w, x**d * psi)) for d in range(dmax + 1)])


def _gaussian_abs_moments(dmax: int) -> np.ndarray:
    """E[N(0,1)^d] for d = 0..dmax (zero for odd d)."""
    out = np.zeros(dmax + 1)
    out[0] = 1.0
    for d in range(2, dmax + 1, 2):
        out[d] = out[d - 2] * (d - 1)
    return out


class _InnerFn:
    """inner(y) = E[sigma^p(recent*zeta + c_lag*eta + remote*y) psi(eta)].

    Three evaluation strategies, picked at construction:
    ``exp`` closed form, ``poly`` exact moment expansion (a polynomial in y),
    or nested Gauss-Hermite quadrature.
    """

    def __init__(self, model: SvModel, kspec: KernelSpec):
        self.model = model
        self.kspec = kspec
        fn = model.volatility
        p = kspec.p
        if fn.kind == "exp":
            self.mode = "exp"
            x, w = gauss_hermite(200)
            psi = _psi(model, kspec, x)
            # E над zeta factors out; eta carries psi
            self._amp = math.exp(0.5 * p * p * kspec.recent_std**2) * float(
                np.dot(w, np.exp(p * kspec.c_lag * x) * psi)
            )
            self._slope = p * kspec.remote_std
            return
        deg = _poly_total_degree(fn, p)
        if deg is not None and model.coupling.kind != "inverse_power":
            self.mode = "poly"
            a = _sigma_pow_coeffs(fn, p)
            mu = _psi_eta_moments(model, kspec, deg)
            gz = _gaussian_abs_moments(deg)
            # (r*zeta + c*eta + s*y)^d expanded by the trinomial theorem;
            # zeta and eta moments collapse, leaving a polynomial in y.
            ycoef = np.zeros(deg + 1)
            r, c, s = kspec.recent_std, kspec.c_lag, kspec.remote_std
            for d in range(deg + 1):
                if a[d] == 0.0:
                    continue
                for i in range(d + 1):
                    for j in range(d - i + 1):
                        l = d - i - j
                        w3 = (
                            math.comb(d, i)
                            * math.comb(d - i, j)
                            * r**i
                            * c**j
                            * s**l
                        )
                        ycoef[l] += a[d] * w3 * gz[i] * mu[j]
            self._ycoef = ycoef
            return
        self.mode = "quad"
        xz, wz = gauss_hermite(80)
        xe, we = gauss_hermite(120)
        psi = _psi(model, kspec, xe)
        self._w_grid = (
            kspec.recent_std * xz[:, None] + kspec.c_lag * xe[None, :]
        ).ravel()
        self._w_weights = (wz[:, None] * (we * psi)[None, :]).ravel()

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        if self.mode == "exp":
            out = self._amp * np.exp(self._slope * y)
        elif self.mode == "poly":
            out = np.polynomial.polynomial.polyval(y, self._ycoef)
        else:
            out = np.empty(y.shape)
            chunk = max(1, int(4e6) // self._w_grid.size)
            s = self.kspec.remote_std
            for lo in range(0, y.size, chunk):
                block = y[lo : lo + chunk, None]
                vals = sigma_pow(self.model.volatility, self._w_grid[None, :] + s * block, self.kspec.p)
                out[lo : lo + chunk] = vals @ self._w_weights
        return float(out[0]) if scalar else out


@dataclass
class KernelFn:
    """Evaluated kernel K(x, y) = prefactor * (f(x) inner(y) - C)."""

    kspec: KernelSpec
    model: SvModel
    separable: SeparableFn

    def __call__(self, x, y):
        return self.separable(x, y)

    @property
    def correlation(self) -> float:
        return self.kspec.correlation


@lru_cache(maxsize=64)
def build_kernel(model: SvModel, variant: str, p: float, lag: int) -> KernelFn:
    """Construct the centered kernel for (variant, p, lag) under the model."""
    kspec = KernelSpec.from_model(model, variant, p, lag)
    pre = _prefactor(model, kspec)
    inner = _InnerFn(model, kspec)
    f = lambda x: sigma_pow(model.volatility, x, kspec.p)
    # center via the same Hermite series used for rank detection
    from .hermite import gauss_hermite as _gh, hermite_design

    x, w = _gh(400)
    terms = 300
    design = hermite_design(terms, x)
    fm = design @ (np.asarray(f(x)) * w)
    gm = design @ (np.asarray(inner(x)) * w)
    const = float(np.sum(fm * gm * kspec.correlation ** np.arange(terms + 1)))
    sep = SeparableFn(f=f, g=inner, const=const, prefactor=pre)
    return KernelFn(kspec=kspec, model=model, separable=sep)


def kernel_eval(model: SvModel, variant: str, p: float, lag: int, x, y):
    """K(x, y) for the requested kernel; signals if E|Z|^p is infinite."""
    return build_kernel(model, variant, p, lag)(x, y)


def product_moment(model: SvModel, variant: str, p: float, lag: int) -> float:
    """E[U^p] with U the (signed or absolute) product at the given lag.

    E[U^p] = prefactor * C where C is the kernel centering constant; for the
    lmsv variant this is m_p^2 E[sigma^p(X_0) sigma^p(X_s)].
    """
    k = build_kernel(model, variant, p, lag)
    return k.separable.prefactor * k.separable.const


def kernel_rank(
    model: SvModel, variant: str, p: float, lag: int, q_max: int = 4
) -> HermiteRankReport:
    """Hermite rank of the kernel w.r.t. the correlated pair (X_0, Xhat)."""
    k = build_kernel(model, variant, p, lag)
    return hermite_coefficients(
        k.separable, q_max=q_max, correlation=k.kspec.correlation, check_order=False
    )


def mc_conditional_moment(
    model: SvModel,
    variant: str,
    p: float,
    lag: int,
    x: float,
    xhat: float,
    n_inner: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Brute-force Monte Carlo of E[U^p | X_0 = x, Xhat = xhat] with its SE.

    Draws the in-between block, the partner innovation, and the shock's
    conditional moment; the final independent shock moment enters through
    the closed-form prefactor, keeping the summand's variance finite.
    """
    kspec = KernelSpec.from_model(model, variant, p, lag)
    pre = _prefactor(model, kspec)
    zeta = rng.standard_normal(n_inner)
    eta = rng.standard_normal(n_inner)
    psi = _psi(model, kspec, eta)
    args = kspec.recent_std * zeta + kspec.c_lag * eta + kspec.remote_std * xhat
    vals = sigma_pow(model.volatility, args, p) * psi
    fx = float(sigma_pow(model.volatility, x, p))
    est = pre * fx * float(np.mean(vals))
    se = pre * fx * float(np.std(vals, ddof=1)) / math.sqrt(n_inner)
    return est, se
