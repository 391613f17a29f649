"""Path statistics addressed by the limit theorems.

Partial-sum processes, sample autocovariances of powers, the
martingale/long-memory decomposition of product sums, and exceedance
point patterns. Heavy-tailed summands make naive accumulation lossy, so
every prefix sum goes through exact compensated summation (math.fsum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import make_coefficients
from .hermite import expect_gaussian
from .kernels import build_kernel, default_variant, mc_conditional_moment, product_moment
from .model import SvModel, SvPath, sigma_pow
from .tails import coupled_abs_moment

__all__ = [
    "PartialSumProcess",
    "SampleCovReport",
    "MTDecomposition",
    "PointPattern",
    "abs_power_mean",
    "partial_sums",
    "sample_cov",
    "mt_decompose",
    "extract_point_pattern",
    "tail_ratio_curve",
    "segmented_fsum",
]


def abs_power_mean(model: SvModel, p: float) -> float:
    """E|Y_0|^p = E|Z|^p * E[sigma^p(X_0)] (X_0 independent of the shock)."""
    m_p = coupled_abs_moment(model.tail, model.coupling, p)
    if not math.isfinite(m_p):
        return math.inf
    return m_p * expect_gaussian(lambda x: sigma_pow(model.volatility, x, p))


def segmented_fsum(values: np.ndarray, cut_points: np.ndarray) -> np.ndarray:
    """Exact prefix sums of `values` at the given cut indices.

    Each segment is reduced with math.fsum and the segments are again
    combined with fsum, so the result is correctly rounded regardless of
    chunking (the parallel-reduction associativity contract).
    """
    sums = []
    prev = 0
    segs = []
    for cut in cut_points:
        segs.append(math.fsum(values[prev:cut]))
        prev = cut
        sums.append(math.fsum(segs))
    return np.asarray(sums)


@dataclass
class PartialSumProcess:
    power: float | None  # None = signed sum of Y
    grid: np.ndarray
    values: np.ndarray
    centered: bool
    n: int
    mean_used: float = 0.0

    def to_csv(self, path: str) -> None:
        np.savetxt(
            path,
            np.column_stack([self.grid, self.values]),
            delimiter=",",
            header="t,s",
            comments="",
        )


def partial_sums(
    path: SvPath,
    power: float | None,
    grid,
    centered: bool = False,
    mean_oracle: float | None = None,
) -> PartialSumProcess:
    """S_n(t) = sum_{i <= [nt]} Y_i (power=None) or sum |Y_i|^p at grid times.

    Centering subtracts [nt] * E|Y_0|^p using the quadrature oracle mean and
    is refused when p >= alpha (the mean is infinite; the positive-stable
    regime needs no centering).
    """
    grid = np.asarray(sorted(grid), dtype=float)
    if grid.size == 0 or grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValueError("grid must lie in [0, 1]")
    n = len(path)
    if power is None:
        vals = path.y
    else:
        if power <= 0:
            raise ValueError("power must be positive (or None for the signed sum)")
        vals = np.abs(path.y) ** power
    mean_used = 0.0
    if centered:
        if power is None:
            raise ValueError("centering applies to absolute-power sums")
        if power >= path.model.tail.alpha:
            raise ValueError(
                "centered sums need p < alpha (infinite mean otherwise; "
                "no centering is used in the p > alpha regime)"
            )
        mean_used = mean_oracle if mean_oracle is not None else abs_power_mean(path.model, power)
    cuts = np.floor(grid * n).astype(int)
    s = segmented_fsum(vals, cuts)
    if centered:
        s = s - cuts * mean_used
    return PartialSumProcess(
        power=power, grid=grid, values=s, centered=centered, n=n, mean_used=mean_used
    )


@dataclass
class SampleCovReport:
    p: float
    lags: np.ndarray
    gamma_hat: np.ndarray
    gamma_true: np.ndarray | None
    mean_bar: float
    n: int
    oracle: str | None = None

    def to_csv(self, path: str) -> None:
        gt = self.gamma_true if self.gamma_true is not None else np.full(len(self.lags), np.nan)
        np.savetxt(
            path,
            np.column_stack([self.lags, self.gamma_hat, gt]),
            delimiter=",",
            header="lag,gamma_hat,gamma_true",
            comments="",
        )


def autocov_centered(vals: np.ndarray, n: int, lags) -> tuple[np.ndarray, float]:
    """gamma_hat(s) = (1/n) sum_{i<=n} (v_i - vbar)(v_{i+s} - vbar), common range."""
    vbar = math.fsum(vals[:n]) / n
    d = vals - vbar
    out = np.array([math.fsum(d[:n] * d[s : n + s]) / n for s in lags])
    return out, vbar


def sample_cov(
    path: SvPath,
    p: float,
    h: int,
    oracle: str | None = "quadrature",
) -> SampleCovReport:
    """Sample autocovariances of |Y|^p at lags 1..h with an oracle column.

    Requires the path to extend h steps past the index range (common range
    1..n with n = len(path) - h). p <= alpha/2 is allowed but flagged: the
    product then has a finite second moment, outside the infinite-variance
    regime of interest.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    n = len(path) - h
    if n < 2:
        raise ValueError("path too short for the requested number of lags")
    alpha = path.model.tail.alpha
    if p >= alpha:
        raise ValueError("sample_cov needs p < alpha (finite E|Y|^p)")
    if p <= alpha / 2.0:
        import warnings

        warnings.warn(
            "p <= alpha/2: the product moment is square integrable, outside "
            "the heavy-tail regime of interest",
            RuntimeWarning,
        )
    vals = np.abs(path.y) ** p
    lags = np.arange(1, h + 1)
    gamma_hat, vbar = autocov_centered(vals, n, lags)
    gamma_true = None
    if oracle == "quadrature":
        mean_p = abs_power_mean(path.model, p)
        variant = default_variant(path.model)
        gamma_true = np.array(
            [product_moment(path.model, variant, p, int(s)) - mean_p**2 for s in lags]
        )
    elif oracle == "mc":
        gamma_true = _mc_gamma_oracle(path.model, p, lags)
    elif oracle is not None:
        raise ValueError(f"unknown oracle: {oracle!r}")
    return SampleCovReport(
        p=p, lags=lags, gamma_hat=gamma_hat, gamma_true=gamma_true,
        mean_bar=vbar, n=n, oracle=oracle,
    )


def _mc_gamma_oracle(model: SvModel, p: float, lags, nsim: int = 10**6, seed: int = 7) -> np.ndarray:
    from .model import sample_marginal, sample_product_pairs

    rng = np.random.default_rng(np.random.SeedSequence((seed, int(nsim))))
    mean_p = float(np.mean(np.abs(sample_marginal(model, rng, nsim)) ** p))
    out = []
    for s in lags:
        prod = np.abs(sample_product_pairs(model, int(s), rng, nsim)) ** p
        out.append(float(np.mean(prod)) - mean_p**2)
    return np.asarray(out)


@dataclass
class MTDecomposition:
    lag: int
    p: float
    martingale: float
    long_memory: float
    raw_centered: float
    residual: float
    residual_se: float
    n: int
    inner: str

    @property
    def identity_gap(self) -> float:
        return abs(self.martingale + self.long_memory - self.raw_centered)


def predictable_states(path: SvPath, lag: int) -> np.ndarray:
    """Xhat_{i,lag}: the standardized F_{i-1}-measurable part of X_{i+lag}.

    Reconstructed from the stored innovations with the same truncated
    coefficients as the path, so the decomposition identity holds exactly
    at finite truncation order.
    """
    if path.innovations.size == 0:
        raise ValueError("decomposition needs innovations (MA synthesis)")
    from .kernels import lag_decomposition

    c = make_coefficients(path.model.gaussian)
    _, _, remote_std, _ = lag_decomposition(path.model.gaussian, lag)
    if remote_std <= 0:
        raise ValueError("no predictable component at this lag (remote_std = 0)")
    n = len(path) - lag
    eta = path.innovations
    m = eta.size - path.x.size
    # X_{i+lag} minus the contribution of eta_{i+lag-1} .. eta_i
    head = np.zeros(n)
    for j in range(1, lag + 1):
        head += c[j - 1] * eta[m + lag - j : m + lag - j + n]
    return (path.x[lag : lag + n] - head) / remote_std


def mt_decompose(
    path: SvPath,
    p: float,
    lag: int,
    variant: str | None = None,
    inner: str = "kernel",
    n_inner: int = 10**6,
    rng: np.random.Generator | None = None,
) -> MTDecomposition:
    """Split the centered product sum into martingale + long-memory parts.

    sum_i (U_i^p - E U^p) = M + T with T = sum_i K(X_i, Xhat_i). With
    inner="kernel" the conditional expectations come from the quadrature
    kernel and the identity holds to rounding. inner="mc" replaces each
    conditional expectation with a brute-force Monte Carlo average of
    ``n_inner`` draws, so the reported residual should be a few combined
    standard errors at most: that is the oracle check of the kernel.
    """
    model = path.model
    if variant is None:
        variant = default_variant(model)
    n = len(path) - lag
    if n < 1:
        raise ValueError("path too short for this lag")
    if variant == "signed":
        u_vals = path.y[:n] * path.y[lag : lag + n]
    else:
        u_vals = np.abs(path.y[:n] * path.y[lag : lag + n]) ** p
    xhat = predictable_states(path, lag)
    kern = build_kernel(model, variant, p, lag)
    k_vals = kern(path.x[:n], xhat)
    e_u = product_moment(model, variant, p, lag)
    t_part = math.fsum(k_vals)
    raw = math.fsum(u_vals) - n * e_u
    if inner == "kernel":
        m_part = math.fsum(u_vals - k_vals) - n * e_u
        residual = m_part + t_part - raw
        residual_se = 0.0
    elif inner == "mc":
        rng = np.random.default_rng(0) if rng is None else rng
        cond = np.empty(n)
        ses = np.empty(n)
        for i in range(n):
            cond[i], ses[i] = mc_conditional_moment(
                model, variant, p, lag, float(path.x[i]), float(xhat[i]), n_inner, rng
            )
        m_part = math.fsum(u_vals - cond)
        residual = m_part + t_part - raw
        residual_se = float(np.sqrt(np.sum(ses**2)))
    else:
        raise ValueError(f"unknown inner method: {inner!r}")
    return MTDecomposition(
        lag=lag, p=p, martingale=m_part, long_memory=t_part, raw_centered=raw,
        residual=residual, residual_se=residual_se, n=n, inner=inner,
    )


@dataclass
class PointPattern:
    times: np.ndarray
    marks: np.ndarray  # shape (#points, h+1)
    threshold: float
    a_n: float
    b_n: float
    h: int
    n: int

    def __len__(self) -> int:
        return len(self.times)

    def multi_exceedance_fraction(self, coords: slice = slice(1, None)) -> float:
        """Fraction of retained points with >= 2 product marks above threshold."""
        if len(self) == 0:
            return 0.0
        exc = np.abs(self.marks[:, coords]) > self.threshold
        return float(np.mean(np.sum(exc, axis=1) >= 2))

    def count_in_box(self, t_lo: float, t_hi: float, coord: int, level: float) -> int:
        sel = (self.times > t_lo) & (self.times <= t_hi)
        return int(np.count_nonzero(np.abs(self.marks[sel, coord]) > level))

    def to_csv(self, path: str) -> None:
        cols = ["t"] + [f"mark{k}" for k in range(self.marks.shape[1])]
        np.savetxt(
            path,
            np.column_stack([self.times, self.marks]),
            delimiter=",",
            header=",".join(cols),
            comments="",
        )


def extract_point_pattern(
    path: SvPath, a_n: float, b_n: float, h: int, threshold: float
) -> PointPattern:
    """Rescaled exceedance pattern with marks (Y_i/a_n, Y_i Y_{i+1}/b_n, ...).

    Retains the indices whose largest absolute mark exceeds the threshold;
    the time coordinate is i/n.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if h < 0:
        raise ValueError("h must be >= 0")
    n = len(path) - h
    if n < 1:
        raise ValueError("path too short for h product coordinates")
    y = path.y
    marks = np.empty((n, h + 1))
    marks[:, 0] = y[:n] / a_n
    for k in range(1, h + 1):
        marks[:, k] = y[:n] * y[k : n + k] / b_n
    keep = np.max(np.abs(marks), axis=1) > threshold
    idx = np.nonzero(keep)[0]
    return PointPattern(
        times=(idx + 1) / n,
        marks=marks[keep],
        threshold=threshold,
        a_n=a_n,
        b_n=b_n,
        h=h,
        n=n,
    )


def tail_ratio_curve(
    sampler_a,
    sampler_b,
    quantiles,
    nsim: int = 10**7,
    rng: np.random.Generator | None = None,
    chunk: int = 1 << 20,
) -> dict:
    """Empirical P(A > x) / P(B > x) at x = upper quantiles of B.

    Both samplers are callables (rng, size) -> draws and are streamed, so
    nsim can exceed memory. Grid points with fewer than 100 exceedances on
    either side are flagged as unreliable.
    """
    quantiles = np.asarray(quantiles, dtype=float)
    if np.any(quantiles <= 0.5) or np.any(quantiles >= 1.0):
        raise ValueError("quantiles must lie in (0.5, 1)")
    rng = np.random.default_rng(0) if rng is None else rng
    k_max = max(16, int(math.ceil(nsim * (1.0 - quantiles.min()))) + 2)
    from .asymptotics import _top_k_streamed

    top = _top_k_streamed(lambda r, s: sampler_b(r, s), k_max, nsim, rng)
    ranks = np.ceil(nsim * (1.0 - quantiles)).astype(int)
    x_grid = np.sort(top)[-ranks]

    counts_a = np.zeros(len(x_grid), dtype=np.int64)
    counts_b = np.zeros(len(x_grid), dtype=np.int64)
    for sampler, counts in ((sampler_a, counts_a), (sampler_b, counts_b)):
        done = 0
        while done < nsim:
            take = min(chunk, nsim - done)
            draws = sampler(rng, take)
            counts += (draws[:, None] > x_grid[None, :]).sum(axis=0)
            done += take
    ratio = counts_a / np.maximum(counts_b, 1)
    se = ratio * np.sqrt(1.0 / np.maximum(counts_a, 1) + 1.0 / np.maximum(counts_b, 1))
    return {
        "x": x_grid,
        "quantiles": quantiles,
        "ratio": ratio,
        "se": se,
        "count_a": counts_a,
        "count_b": counts_b,
        "unreliable": (counts_a < 100) | (counts_b < 100),
    }
