"""Asymptotic constants and the limit-regime dichotomy.

Normalizing sequences: ``a_n`` is the (1 - 1/n)-quantile-type scale of |Y|
and ``b_n`` the same for the lag-1 product |Y_0 Y_1|; both are regularly
varying with index 1/alpha and a_n = o(b_n). They are computed by exact
tail inversion whenever the marginal tail is analytically available
(constant volatility with a Pareto shock), and by streamed Monte Carlo
quantiles otherwise.

The regime classifier compares the long-memory rate exponent
``1 - tau*(1 - H)`` with the heavy-tail exponent ``p/alpha`` and returns
which limit wins, its normalization growth exponent, and the Hermite rank
that produced it. Equality is a refused boundary case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .gaussian import theoretical_covariance
from .hermite import expect_bivariate_gaussian, expect_gaussian
from .model import SvModel, VolatilityFn, sample_marginal, sample_product_pairs, sigma_pow
from .tails import abs_tail

__all__ = [
    "BoundaryRegimeError",
    "NormalizingSequence",
    "RegimeVerdict",
    "breiman_constant",
    "sigma_cross_moment",
    "product_tail_constants",
    "classify_regime",
    "rosenblatt_norm_constant",
]


class BoundaryRegimeError(ValueError):
    """The dichotomy sits exactly on its boundary; the theory is silent."""


# ---------------------------------------------------------------------------
# normalizing sequences


def _top_k_streamed(sampler, k: int, nsim: int, rng, chunk: int = 1 << 20) -> np.ndarray:
    """k largest |draws| out of nsim, streamed in chunks."""
    keep = np.empty(0)
    done = 0
    while done < nsim:
        take = min(chunk, nsim - done)
        vals = np.abs(sampler(rng, take))
        keep = np.concatenate([keep, vals[vals >= (keep.min() if keep.size >= k else -np.inf)]])
        if keep.size > 4 * k:
            keep = np.partition(keep, keep.size - k)[-k:]
        done += take
    if keep.size > k:
        keep = np.partition(keep, keep.size - k)[-k:]
    return np.sort(keep)


@dataclass
class NormalizingSequence:
    """Evaluator n -> a_n (kind="marginal") or n -> b_n (kind="product").

    method="auto" picks exact tail inversion when available, otherwise
    Monte Carlo with ``mc_factor * n`` draws (refused below 10n).
    """

    model: SvModel
    kind: str = "marginal"
    method: str = "auto"
    mc_factor: int = 100
    lag: int = 1
    seed: int = 20260809
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("marginal", "product"):
            raise ValueError(f"unknown kind: {self.kind!r}")
        if self.method not in ("auto", "closed_form", "mc"):
            raise ValueError(f"unknown method: {self.method!r}")

    @property
    def closed_form_available(self) -> bool:
        if self.model.tail.family != "pareto":
            return False
        if not self.model.volatility.is_constant:
            return False
        if self.kind == "product":
            # exact product tail only for the uncentered pure two-sided Pareto
            return not self.model.tail.centered and self.model.coupling.kind == "independent"
        return self.model.coupling.kind == "independent"

    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return "closed_form" if self.closed_form_available else "mc"

    def __call__(self, n: int) -> float:
        key = (n, self.resolved_method())
        if key not in self._cache:
            self._cache[key] = self._evaluate(n)
        return self._cache[key]

    def _evaluate(self, n: int) -> float:
        if n < 1:
            raise ValueError("n must be >= 1")
        method = self.resolved_method()
        if method == "closed_form":
            if not self.closed_form_available:
                raise ValueError("closed-form tail not available for this model")
            return self._invert_tail(n)
        nsim = self.mc_factor * n
        if nsim < 10 * n:
            raise ValueError("mc quantile needs at least 10*n draws")
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, n, self.lag)))
        if self.kind == "marginal":
            sampler = lambda r, k: sample_marginal(self.model, r, k)
        else:
            sampler = lambda r, k: sample_product_pairs(self.model, self.lag, r, k)
        k = max(1, nsim // n)
        top = _top_k_streamed(sampler, k + 1, nsim, rng)
        return float(top[0])

    def _invert_tail(self, n: int) -> float:
        law = self.model.tail
        const = sigma_pow(self.model.volatility, 0.0, 1.0)  # constant sigma value
        target = 1.0 / n
        if self.kind == "marginal":
            # a_n = inf{x : P(|Y| > x) < 1/n}, |Y| = const*|Z| exact
            edge = (law.support_edge - abs(law.shift)) * const

            def tail(x):
                return float(abs_tail(law, x / const))

        else:
            if law.centered:
                raise ValueError("closed-form product tail needs the uncentered law")
            s = law.support_edge * const
            edge = s * s

            def tail(x):
                # P(|Z0 Z1| > x) = (x/s^2)^(-alpha) (1 + alpha ln(x/s^2)) for x >= s^2
                t = x / (s * s)
                if t <= 1.0:
                    return 1.0
                return t ** (-law.alpha) * (1.0 + law.alpha * math.log(t))

        if n == 1 or tail(max(edge, 1e-12)) <= target:
            # the tail equals 1 up to the support edge; the infimum sits there
            return max(edge, 1e-12)
        lo, hi = max(edge, 1e-12), 10.0 * max(edge, 1.0)
        while tail(hi) >= target:
            hi *= 10.0
            if hi > 1e300:
                raise RuntimeError("tail inversion failed to bracket")
        return float(brentq(lambda x: tail(x) - target, lo, hi, xtol=1e-12, rtol=1e-12))


# ---------------------------------------------------------------------------
# Breiman and product-tail constants


def breiman_constant(fn: VolatilityFn, alpha: float, rtol: float = 1e-8) -> float:
    """E[sigma^alpha(X_0)] for standard Gaussian X_0, by order-doubling GH."""
    order = 100
    prev = None
    for _ in range(6):
        val = expect_gaussian(lambda x: sigma_pow(fn, x, alpha), order)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        order *= 2
    raise RuntimeError("Gauss-Hermite refinement for E[sigma^alpha] did not converge")


def sigma_cross_moment(fn: VolatilityFn, alpha: float, rho: float) -> float:
    """E[sigma^alpha(X_0) sigma^alpha(X_h)] for a correlation-rho pair."""
    if fn.kind == "exp":
        return math.exp(alpha * alpha * (1.0 + rho))
    return expect_bivariate_gaussian(
        lambda x, y: sigma_pow(fn, x, alpha) * sigma_pow(fn, y, alpha), rho, order=160
    )


def product_tail_constants(
    model: SvModel,
    h: int,
    method: str = "auto",
    quantile: float = 0.9999,
    nsim: int = 10**7,
    seed: int = 4,
) -> dict:
    """Limit constants (d_plus, d_minus) of the lag-h product tail.

    LMSV: closed/quadrature form
    ``d+(h) = (beta^2 + (1-beta)^2) E[sig^a sig_h^a] / E[sig^a sig_1^a]``
    and ``d-(h) = 2 beta (1-beta) * (same ratio)``. Leverage: Monte Carlo
    tail-ratio at a high quantile of |Y_0 Y_1|, with standard errors; the
    estimate is flagged LowPrecision when the relative SE exceeds 10%.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if method not in ("auto", "lmsv", "mc"):
        raise ValueError(f"unknown method: {method!r}")
    if method == "auto":
        method = "lmsv" if model.is_lmsv else "mc"
    if method == "lmsv":
        if not model.is_lmsv:
            raise ValueError("closed form requires the independent coupling")
        beta = model.tail.beta
        alpha = model.tail.alpha
        rho_h = theoretical_covariance(model.gaussian, h)
        rho_1 = theoretical_covariance(model.gaussian, 1)
        ratio = sigma_cross_moment(model.volatility, alpha, rho_h) / sigma_cross_moment(
            model.volatility, alpha, rho_1
        )
        same = beta * beta + (1.0 - beta) ** 2
        return {
            "d_plus": same * ratio,
            "d_minus": 2.0 * beta * (1.0 - beta) * ratio,
            "method": "lmsv",
            "se": 0.0,
            "low_precision": False,
        }
    rng = np.random.default_rng(np.random.SeedSequence((seed, h)))
    ref = sample_product_pairs(model, 1, rng, nsim)
    x = float(np.quantile(np.abs(ref), quantile))
    n_ref = int(np.count_nonzero(np.abs(ref) > x))
    target = sample_product_pairs(model, h, rng, nsim)
    n_plus = int(np.count_nonzero(target > x))
    n_minus = int(np.count_nonzero(target < -x))
    d_plus = n_plus / max(n_ref, 1)
    d_minus = n_minus / max(n_ref, 1)
    se = math.sqrt(max(n_plus, 1)) / max(n_ref, 1)
    low = (se / d_plus > 0.1) if d_plus > 0 else True
    if low:
        warnings.warn("product tail-ratio estimate has relative SE > 10%", RuntimeWarning)
    return {
        "d_plus": d_plus,
        "d_minus": d_minus,
        "method": "mc",
        "se": se,
        "low_precision": low,
        "threshold": x,
    }


# ---------------------------------------------------------------------------
# regime classification


@dataclass(frozen=True)
class RegimeVerdict:
    statistic: str
    regime: str
    rate_exponent: float
    p: float
    alpha: float
    hurst: float | None
    tau: int | None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "regime": self.regime,
            "rate_exponent": self.rate_exponent,
            "p": self.p,
            "alpha": self.alpha,
            "hurst": self.hurst,
            "tau": self.tau,
        }


def classify_regime(
    p: float,
    alpha: float,
    hurst: float | None,
    tau: int,
    statistic: str = "partial_sum_power",
    boundary_tol: float = 1e-9,
) -> RegimeVerdict:
    """Predict the limit regime for a power-p statistic.

    * p > alpha: positive stable limit, no centering, exponent p/alpha.
    * p < alpha < 2p: stable wins iff 1 - tau(1-H) < p/alpha, the Hermite
      limit iff >; equality raises :class:`BoundaryRegimeError`.
    * alpha >= 2p (finite variance, outside the heavy-tail theorems): the
      classical dichotomy between the sqrt(n) Gaussian limit and the
      Hermite limit applies; short memory always yields sqrt(n).
    """
    if alpha <= 0 or p <= 0:
        raise ValueError("alpha and p must be positive")
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if hurst is not None and not (0.5 < hurst < 1.0):
        raise ValueError("hurst must lie in (1/2, 1), or be None for short memory")

    if abs(p - alpha) < boundary_tol:
        raise BoundaryRegimeError("p == alpha: integrability boundary")
    if p > alpha:
        return RegimeVerdict(statistic, "positive_stable_no_centering", p / alpha, p, alpha, hurst, tau)

    long_memory = hurst is not None and tau * (1.0 - hurst) < 0.5
    hermite_rate = 1.0 - tau * (1.0 - hurst) if long_memory else 0.5

    if alpha < 2.0 * p:
        stable_rate = p / alpha
        if abs(hermite_rate - stable_rate) < boundary_tol:
            raise BoundaryRegimeError(
                f"1 - tau(1-H) == p/alpha == {stable_rate}: dichotomy boundary"
            )
        if hermite_rate > stable_rate:
            return RegimeVerdict(statistic, f"hermite_limit", hermite_rate, p, alpha, hurst, tau)
        return RegimeVerdict(statistic, "stable_levy", stable_rate, p, alpha, hurst, tau)

    if long_memory and hermite_rate > 0.5:
        return RegimeVerdict(statistic, "hermite_limit", hermite_rate, p, alpha, hurst, tau)
    return RegimeVerdict(statistic, "short_memory_gaussian", 0.5, p, alpha, hurst, tau)


def rosenblatt_norm_constant(tau: int, hurst: float) -> float:
    """K_1(tau, H) > 0, defined for tau*(1-H) < 1/2 by

    K_1^2 = (tau(H-1)+1)(2 tau(H-1)+1) / (tau! {2 Gamma(2-2H) sin(pi(H-1/2))}^tau).
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if not (0.5 < hurst < 1.0):
        raise ValueError("hurst must lie in (1/2, 1)")
    if tau * (1.0 - hurst) >= 0.5:
        raise ValueError("requires tau*(1-H) < 1/2 (numerator nonpositive otherwise)")
    num = (tau * (hurst - 1.0) + 1.0) * (2.0 * tau * (hurst - 1.0) + 1.0)
    den = math.factorial(tau) * (
        2.0 * gamma_fn(2.0 - 2.0 * hurst) * math.sin(math.pi * (hurst - 0.5))
    ) ** tau
    val = num / den
    if val <= 0:
        raise ValueError("nonpositive constant; parameters outside the valid range")
    return math.sqrt(val)
