"""Regularly varying shock laws and the joint leverage law of (Z, eta).

The default shock is a two-sided Pareto with ``P(|Z| > x) = (x/s)**-alpha``
for ``x >= s = x_min*scale`` and no interior mass; ``beta`` is the right-tail
balance ``P(Z > x) / P(|Z| > x)``. This family has ``E|Z|**alpha = inf``,
closed-form tails, quantiles, and absolute moments, which makes it the
reference oracle for all normalizing-sequence computations.

A :class:`LeverageCoupling` describes how the shock ``Z_i`` depends on the
same-index Gaussian innovation ``eta_i``:

* ``independent``:      Z drawn from the law, ignoring eta,
* ``inverse_power``:    Z = |eta|**(-1/alpha) * U with U independent,
* ``polynomial_mix``:   Z = Z' * psi1(eta) + psi2(eta), Z' independent.

Every sampler is driven by caller-supplied uniforms (one per shock), so
paths are reproducible and couplings are exchangeable in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn, ndtri
from scipy.stats import levy_stable

__all__ = [
    "TailLaw",
    "LeverageCoupling",
    "quantile",
    "sample",
    "sample_pair",
    "sample_shocks",
    "tail_function",
    "abs_tail",
    "moment",
    "mean",
    "potter_bound_check",
    "conditional_abs_moment",
    "conditional_mean",
    "coupled_abs_moment",
    "coupled_mean",
]


@dataclass(frozen=True)
class TailLaw:
    """Marginal law of the shock Z (before any leverage coupling)."""

    alpha: float
    beta: float = 1.0
    family: str = "pareto"
    x_min: float = 1.0
    scale: float = 1.0
    skew: float = 0.0
    centered: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.family not in ("pareto", "stable"):
            raise ValueError(f"unknown family: {self.family!r}")
        if self.family == "stable" and not (0.0 < self.alpha < 2.0):
            raise ValueError("stable family requires alpha in (0, 2)")
        if self.x_min <= 0 or self.scale <= 0:
            raise ValueError("x_min and scale must be positive")
        if self.centered and self.alpha <= 1.0:
            raise ValueError("centering requires alpha > 1 (finite mean)")

    @property
    def support_edge(self) -> float:
        return self.x_min * self.scale

    @property
    def shift(self) -> float:
        """Amount subtracted from the raw variable (its mean, if centered)."""
        if not self.centered:
            return 0.0
        return _raw_mean(self)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "family": self.family,
            "x_min": self.x_min,
            "scale": self.scale,
            "skew": self.skew,
            "centered": self.centered,
        }


def _raw_mean(law: TailLaw) -> float:
    if law.family == "pareto":
        if law.alpha <= 1.0:
            return math.inf
        return (2.0 * law.beta - 1.0) * law.alpha / (law.alpha - 1.0) * law.support_edge
    # S1 parameterization: the location parameter is the mean for alpha > 1
    return 0.0


def mean(law: TailLaw) -> float:
    """E[Z]; zero by construction when the law is centered."""
    if law.centered:
        return 0.0
    return _raw_mean(law)


def _raw_quantile(law: TailLaw, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if law.family == "stable":
        return levy_stable.ppf(u, law.alpha, law.skew, scale=law.scale)
    s = law.support_edge
    b0 = 1.0 - law.beta
    out = np.empty_like(u)
    neg = u < b0
    with np.errstate(divide="ignore"):
        out[neg] = -s * (b0 / u[neg]) ** (1.0 / law.alpha)
        pos = ~neg
        out[pos] = s * (law.beta / (1.0 - u[pos])) ** (1.0 / law.alpha)
    return out


def quantile(law: TailLaw, u):
    """Inverse CDF of Z; vectorized in u."""
    q = _raw_quantile(law, u) - law.shift
    return float(q) if np.isscalar(u) else q


def sample(law: TailLaw, rng: np.random.Generator, size: int) -> np.ndarray:
    if law.family == "stable":
        from .reference import StableLaw, sample_stable

        z = sample_stable(StableLaw(law.alpha, law.skew, law.scale), rng, size)
        return z - law.shift
    return quantile(law, rng.random(size))


def _raw_sf(law: TailLaw, t) -> np.ndarray:
    """P(Z_raw > t) for the uncentered two-sided Pareto."""
    t = np.asarray(t, dtype=float)
    s = law.support_edge
    out = np.empty_like(t)
    hi = t >= s
    out[hi] = law.beta * (t[hi] / s) ** (-law.alpha)
    mid = (t > -s) & ~hi
    out[mid] = law.beta
    lo = t <= -s
    out[lo] = law.beta + (1.0 - law.beta) * (1.0 - (-t[lo] / s) ** (-law.alpha))
    return out


def tail_function(law: TailLaw, x) -> tuple[np.ndarray, np.ndarray]:
    """(P(Z > x), P(Z < -x)) for x > 0, exact for the Pareto family."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("tail_function requires x > 0")
    if law.family == "stable":
        p_r = levy_stable.sf(x + law.shift, law.alpha, law.skew, scale=law.scale)
        p_l = levy_stable.cdf(-x + law.shift, law.alpha, law.skew, scale=law.scale)
        return p_r, p_l
    p_r = _raw_sf(law, x + law.shift)
    # no atoms: P(Z_raw <= t) = 1 - P(Z_raw > t)
    p_l = 1.0 - _raw_sf(law, -x + law.shift)
    return p_r, p_l


def abs_tail(law: TailLaw, x):
    """P(|Z| > x), the quantity that defines the marginal normalization."""
    p_r, p_l = tail_function(law, x)
    return p_r + p_l


def moment(law: TailLaw, p: float) -> float:
    """E[|Z|**p]; returns inf for p >= alpha."""
    if p <= 0:
        raise ValueError("p must be positive")
    if p >= law.alpha:
        return math.inf
    if law.family == "stable":
        from scipy.integrate import quad

        val, _ = quad(
            lambda x: p * x ** (p - 1.0) * float(abs_tail(law, x)), 0, np.inf, limit=200
        )
        return val
    if not law.centered:
        return law.support_edge**p * law.alpha / (law.alpha - p)
    return _abs_power_affine(law, 1.0, -law.shift, p)


def _gl_nodes(n: int = 96):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=1)
def _gl_cache():
    return _gl_nodes()


def _branch_integral(s, alpha, p, a, b, sign, mass):
    """mass * E|a*Z+b|^p over one Pareto branch, Z = sign*s*v**(-1/alpha).

    Substituting v = t**gamma with gamma = alpha/(alpha-p) removes the
    endpoint singularity; the integrand is then smooth except for a |.|
    kink, across which the integral is split.
    """
    if mass == 0.0:
        return 0.0
    gamma = alpha / (alpha - p)
    t_nodes, w = _gl_cache()

    def val(t):
        v = t**gamma
        z = sign * s * v ** (-1.0 / alpha)
        return np.abs(a * z + b) ** p * gamma * t ** (gamma - 1.0)

    pieces = [(0.0, 1.0)]
    if a != 0.0:
        z_star = -b / a
        if sign * z_star >= s:
            v_star = (s / abs(z_star)) ** alpha
            t_star = v_star ** (1.0 / gamma)
            if 0.0 < t_star < 1.0:
                pieces = [(0.0, t_star), (t_star, 1.0)]
    total = 0.0
    for lo, hi in pieces:
        t = lo + (hi - lo) * t_nodes
        total += (hi - lo) * float(np.dot(w, val(t)))
    return mass * total


def _abs_power_affine(law: TailLaw, a: float, b: float, p: float) -> float:
    """E|a*Z_raw + b|**p for the (uncentered) two-sided Pareto law."""
    if p >= law.alpha:
        return math.inf
    if a == 0.0:
        return abs(b) ** p
    s = law.support_edge
    pos = _branch_integral(s, law.alpha, p, a, b, +1.0, law.beta)
    neg = _branch_integral(s, law.alpha, p, a, b, -1.0, 1.0 - law.beta)
    return pos + neg


def potter_bound_check(
    law: TailLaw,
    eps: float,
    x_grid: np.ndarray,
    y_grid: np.ndarray,
    train_x=None,
    train_y=None,
) -> dict:
    """Check P(y|Z| > x) / P(|Z| > x) <= C (y v 1)**(alpha+eps) on a grid.

    C is calibrated as the smallest constant that works on the training
    grid; the report flags a violation if any evaluation-grid quotient
    exceeds 1 (up to rounding), signalling a law/sampler inconsistency.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x_grid = np.asarray(x_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    if np.any(x_grid < 1.0) or np.any(y_grid <= 0.0):
        raise ValueError("grid requires x >= 1 and y > 0")
    if train_x is None:
        train_x = np.geomspace(1.0, 1e6, 41)
    if train_y is None:
        train_y = np.geomspace(1e-3, 1e3, 41)

    def ratio(xs, ys):
        xs, ys = np.meshgrid(xs, ys, indexing="ij")
        return abs_tail(law, xs / ys) / abs_tail(law, xs), ys

    r_tr, y_tr = ratio(np.asarray(train_x, float), np.asarray(train_y, float))
    c = float(np.max(r_tr / np.maximum(y_tr, 1.0) ** (law.alpha + eps)))
    c = max(c, 1.0)
    r_ev, y_ev = ratio(x_grid, y_grid)
    quot = r_ev / (c * np.maximum(y_ev, 1.0) ** (law.alpha + eps))
    max_quot = float(np.max(quot))
    return {
        "constant": c,
        "max_quotient": max_quot,
        "ok": bool(max_quot <= 1.0 + 1e-9),
        "eps": eps,
    }


# ---------------------------------------------------------------------------
# leverage couplings


@dataclass(frozen=True)
class LeverageCoupling:
    """Dependence of the shock Z_i on the same-index innovation eta_i."""

    kind: str = "independent"
    psi1: tuple[float, ...] = (1.0,)
    psi2: tuple[float, ...] = (0.0,)
    u_law: str = "signed_halfnormal"

    def __post_init__(self):
        if self.kind not in ("independent", "inverse_power", "polynomial_mix"):
            raise ValueError(f"unknown coupling kind: {self.kind!r}")
        if self.u_law not in ("signed_halfnormal", "one"):
            raise ValueError(f"unknown u_law: {self.u_law!r}")
        object.__setattr__(self, "psi1", tuple(float(c) for c in self.psi1))
        object.__setattr__(self, "psi2", tuple(float(c) for c in self.psi2))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "psi1": list(self.psi1),
            "psi2": list(self.psi2),
            "u_law": self.u_law,
        }


def _polyval(coeffs: tuple[float, ...], x):
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coeffs)


def _u_from_uniform(coupling: LeverageCoupling, u):
    if coupling.u_law == "one":
        return np.ones_like(np.asarray(u, dtype=float))
    # one uniform -> Rademacher sign times half-normal magnitude
    u = np.asarray(u, dtype=float)
    mag = ndtri(0.5 * (1.0 + np.abs(2.0 * u - 1.0)))
    return np.sign(2.0 * u - 1.0) * mag


def sample_pair(law: TailLaw, coupling: LeverageCoupling, eta, u):
    """One shock Z with marginal `law` and the coupling's dependence on eta.

    ``u`` is the uniform variate driving the shock's own randomness; for the
    independent coupling the output does not depend on eta at all.
    """
    eta = np.asarray(eta, dtype=float)
    scalar = eta.ndim == 0 and np.isscalar(u)
    if coupling.kind == "independent":
        z = quantile(law, u) * np.ones_like(eta)
    elif coupling.kind == "inverse_power":
        mag = np.maximum(np.abs(eta), 1e-300)
        z = mag ** (-1.0 / law.alpha) * _u_from_uniform(coupling, u)
    else:
        z = quantile(law, u) * _polyval(coupling.psi1, eta) + _polyval(coupling.psi2, eta)
    return float(z) if scalar else z


def sample_shocks(
    law: TailLaw, coupling: LeverageCoupling, eta: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    return sample_pair(law, coupling, eta, rng.random(len(eta)))


def _abs_moment_u(coupling: LeverageCoupling, p: float) -> float:
    if coupling.u_law == "one":
        return 1.0
    # E|N(0,1)|^p
    return 2.0 ** (p / 2.0) * gamma_fn((p + 1.0) / 2.0) / math.sqrt(math.pi)


def conditional_abs_moment(law: TailLaw, coupling: LeverageCoupling, p: float, eta):
    """psi_p(eta) = E[|Z|**p | eta], vectorized over eta."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if coupling.kind == "independent":
        return np.full(eta.shape, moment(law, p))
    if coupling.kind == "inverse_power":
        mag = np.maximum(np.abs(eta), 1e-300)
        return _abs_moment_u(coupling, p) * mag ** (-p / law.alpha)
    a = _polyval(coupling.psi1, eta)
    b = _polyval(coupling.psi2, eta)
    if law.centered:
        b = b - law.shift * a
    base = TailLaw(law.alpha, law.beta, law.family, law.x_min, law.scale, law.skew)
    return np.array([_abs_power_affine(base, ai, bi, p) for ai, bi in zip(a, b)])


def conditional_mean(law: TailLaw, coupling: LeverageCoupling, eta):
    """E[Z | eta], vectorized over eta."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if coupling.kind == "independent":
        return np.full(eta.shape, mean(law))
    if coupling.kind == "inverse_power":
        if coupling.u_law == "one":
            mag = np.maximum(np.abs(eta), 1e-300)
            return mag ** (-1.0 / law.alpha)
        return np.zeros(eta.shape)
    return mean(law) * _polyval(coupling.psi1, eta) + _polyval(coupling.psi2, eta)


def _gauss_abs_inv_moment(q: float) -> float:
    """E|N(0,1)|**(-q) for q < 1."""
    return 2.0 ** (-q / 2.0) * gamma_fn((1.0 - q) / 2.0) / math.sqrt(math.pi)


def coupled_abs_moment(law: TailLaw, coupling: LeverageCoupling, p: float) -> float:
    """E[|Z|**p] for the coupled shock (inf when p >= alpha)."""
    if p >= law.alpha:
        return math.inf
    if coupling.kind == "independent":
        return moment(law, p)
    if coupling.kind == "inverse_power":
        return _abs_moment_u(coupling, p) * _gauss_abs_inv_moment(p / law.alpha)
    from .hermite import gauss_hermite

    x, w = gauss_hermite(160)
    return float(np.dot(w, conditional_abs_moment(law, coupling, p, x)))


def coupled_mean(law: TailLaw, coupling: LeverageCoupling) -> float:
    """E[Z] for the coupled shock."""
    if coupling.kind == "independent":
        return mean(law)
    if coupling.kind == "inverse_power":
        if law.alpha <= 1.0:
            return math.nan
        if coupling.u_law == "one":
            return _gauss_abs_inv_moment(1.0 / law.alpha)
        return 0.0
    from .hermite import gauss_hermite

    x, w = gauss_hermite(160)
    return float(np.dot(w, conditional_mean(law, coupling, x)))
