"""Monte Carlo verification harness for the limit-theorem predictions.

A plan fixes a model, a statistic, an n-grid, and a replicate count; the
harness simulates, fits the growth exponent of the statistic's spread
against the predicted normalization exponent, and compares the normalized
replicates at the largest n with the predicted limit law.

Scale statistics are interquartile ranges, not variances: the variance is
infinite in every stable regime while the IQR always exists and scales with
the normalization. Replicate seeds are derived from the master seed by
spawn keys (n-index, replicate), so results are independent of scheduling
and worker count.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .asymptotics import (
    BoundaryRegimeError,
    NormalizingSequence,
    RegimeVerdict,
    classify_regime,
)
from .estimators import (
    abs_power_mean,
    autocov_centered,
    extract_point_pattern,
    mt_decompose,
    PointPattern,
)
from .gaussian import theoretical_covariance
from .hermite import hermite_coefficients
from .kernels import default_variant, kernel_rank, product_moment
from dataclasses import replace as _model_replace

from .model import SvModel, simulate_sv, sigma_pow
from .reference import (
    StableLaw,
    hermite_marginal_std,
    sample_hermite_marginal,
    sample_stable,
)
from .tails import coupled_abs_moment, coupled_mean

__all__ = [
    "StatisticSpec",
    "ExperimentPlan",
    "McSummary",
    "run_plan",
    "dichotomy_scan",
    "poisson_diagnostics",
    "no_common_jump_test",
    "predict_verdict",
]


@dataclass(frozen=True)
class StatisticSpec:
    """What to compute from each replicate path.

    kind="sum": signed partial sum of Y at t=1 (needs E[Z] = 0 for the
    stable theory). kind="abs_sum": sum of |Y|^p, centered unless p > alpha.
    kind="autocov": gamma_hat_p(lag) - gamma_p(lag) with the quadrature
    oracle as the true value. kind="t_part": the long-memory component
    T_{n,s}/n of the product-sum decomposition, whose rate is the pure
    Hermite rate rho_n^(tau/2) of the kernel (the component through which
    leverage changes the covariance rates).
    """

    kind: str = "abs_sum"
    p: float = 1.0
    lag: int = 1
    centered: bool = True

    def __post_init__(self):
        if self.kind not in ("sum", "abs_sum", "autocov", "t_part"):
            raise ValueError(f"unknown statistic kind: {self.kind!r}")
        if self.p <= 0:
            raise ValueError("p must be positive")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")


@dataclass(frozen=True)
class ExperimentPlan:
    model: SvModel
    statistic: StatisticSpec
    n_grid: tuple[int, ...]
    replicates: int = 500
    master_seed: int = 0
    distance: str = "ks"  # "ks" | "ad" | "none"
    affine_fit: bool = True
    synthesis: str = "auto"  # "auto" | "ma" | "exact"
    exponent_tol: float = 0.07
    distance_p_threshold: float = 0.01
    r2_threshold: float = 0.95
    reference_size: int = 2000
    reference_n_internal: int = 2**15
    ma_truncation_factor: int | None = None
    reference_regime: str | None = None

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.distance not in ("ks", "ad", "none"):
            raise ValueError(f"unknown distance: {self.distance!r}")
        if self.distance != "none" and self.replicates < 200:
            raise ValueError("distribution tests need at least 200 replicates")

    def resolved_synthesis(self) -> str:
        if self.synthesis != "auto":
            return self.synthesis
        return "exact" if self.model.is_lmsv else "ma"

    def to_dict(self) -> dict:
        d = {
            "model": self.model.to_dict(),
            "statistic": vars(self.statistic).copy(),
            "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "distance": self.distance,
            "affine_fit": self.affine_fit,
            "synthesis": self.synthesis,
        }
        return d


@dataclass
class McSummary:
    plan: ExperimentPlan
    verdict: RegimeVerdict
    n_grid: tuple[int, ...]
    iqrs: list[float]
    medians: list[float]
    infinite_cells: list[int]
    fitted_exponent: float
    exponent_se: float
    expected_slope: float
    r_squared: float
    distance_stat: float | None
    distance_p: float | None
    scale_ratio: float | None
    verdict_match: bool | None  # None = inconclusive (poor regression fit)
    runtime_seconds: float
    statistics_by_n: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.to_dict(),
            "n_grid": list(self.n_grid),
            "iqrs": self.iqrs,
            "medians": self.medians,
            "infinite_cells": self.infinite_cells,
            "fitted_exponent": self.fitted_exponent,
            "exponent_se": self.exponent_se,
            "expected_slope": self.expected_slope,
            "r_squared": self.r_squared,
            "distance_stat": self.distance_stat,
            "distance_p": self.distance_p,
            "scale_ratio": self.scale_ratio,
            "verdict_match": self.verdict_match,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def predict_verdict(model: SvModel, stat: StatisticSpec) -> RegimeVerdict:
    """Theoretical regime for the plan's statistic, with the rank computed
    from the model itself (sigma^p for sums, the product kernel for
    autocovariances)."""
    alpha = model.tail.alpha
    hurst = model.gaussian.hurst
    if stat.kind == "sum":
        if not (1.0 < alpha < 2.0):
            raise ValueError("the signed-sum theory needs alpha in (1, 2)")
        mz = coupled_mean(model.tail, model.coupling)
        if abs(mz) > 1e-10:
            raise ValueError("the signed-sum stable limit needs E[Z] = 0")
        return RegimeVerdict("sum", "stable_levy", 1.0 / alpha, 1.0, alpha, hurst, None)
    if stat.kind == "abs_sum":
        rep = hermite_coefficients(
            lambda x: sigma_pow(model.volatility, x, stat.p), q_max=6, check_order=False
        )
        tau = rep.rank
        if tau is None:
            raise ValueError("sigma^p has no detectable Hermite rank up to 6")
        return classify_regime(stat.p, alpha, hurst, tau, statistic="abs_sum")
    variant = default_variant(model)
    rep = kernel_rank(model, variant, stat.p, stat.lag, q_max=4)
    tau = rep.rank
    if tau is None:
        raise ValueError("kernel has no detectable Hermite rank up to 4")
    if stat.kind == "t_part":
        if hurst is not None and tau * (1.0 - hurst) < 0.5:
            rate = 1.0 - tau * (1.0 - hurst)
            return RegimeVerdict("t_part", "hermite_limit", rate, stat.p, alpha, hurst, tau)
        # weak memory relative to the rank (tau*(1-H) >= 1/2): the T-sums are
        # sqrt(n)-scale; at the exact boundary there are logarithmic
        # corrections on top of the 1/2 exponent
        return RegimeVerdict("t_part", "short_memory_gaussian", 0.5, stat.p, alpha, hurst, tau)
    return classify_regime(stat.p, alpha, hurst, tau, statistic="autocov")


def _statistic_batch(args) -> np.ndarray:
    """R replicate values of the raw statistic at one n (worker function)."""
    plan, n_index, rep_range = args
    model, stat = plan.model, plan.statistic
    n = plan.n_grid[n_index]
    extra = stat.lag if stat.kind in ("autocov", "t_part") else 0
    synthesis = plan.resolved_synthesis()
    if (
        plan.ma_truncation_factor is not None
        and synthesis == "ma"
        and model.gaussian.coeff_law == "fractional"
    ):
        # truncation proportional to the horizon: the relative truncation
        # bias of the covariance profile is then the same in every cell, so
        # the fitted scaling exponent is unaffected
        gspec = _model_replace(model.gaussian, truncation_m=plan.ma_truncation_factor * n)
        model = _model_replace(model, gaussian=gspec)
    mean_p = None
    gamma_true = None
    if stat.kind == "abs_sum" and stat.centered and stat.p < model.tail.alpha:
        mean_p = abs_power_mean(model, stat.p)
    if stat.kind == "autocov":
        variant = default_variant(model)
        gamma_true = product_moment(model, variant, stat.p, stat.lag) - abs_power_mean(
            model, stat.p
        ) ** 2
    if stat.kind == "t_part" and synthesis != "ma":
        raise ValueError("the T-part needs innovations: use MA synthesis")
    out = np.empty(len(rep_range))
    for k, rep in enumerate(rep_range):
        seed = np.random.SeedSequence(entropy=plan.master_seed, spawn_key=(n_index, rep))
        path = simulate_sv(model, n + extra, seed, synthesis=synthesis)
        if stat.kind == "sum":
            val = math.fsum(path.y)
        elif stat.kind == "abs_sum":
            val = math.fsum(np.abs(path.y) ** stat.p)
            if mean_p is not None:
                val -= n * mean_p
        elif stat.kind == "t_part":
            dec = mt_decompose(path, stat.p, stat.lag)
            val = dec.long_memory / n
        else:
            gh, _ = autocov_centered(np.abs(path.y) ** stat.p, n, [stat.lag])
            val = gh[0] - gamma_true
        out[k] = val
    return out


def _collect_statistics(plan: ExperimentPlan, workers: int) -> dict[int, np.ndarray]:
    by_n: dict[int, np.ndarray] = {}
    for i_n in range(len(plan.n_grid)):
        if workers <= 1:
            vals = _statistic_batch((plan, i_n, range(plan.replicates)))
        else:
            chunks = np.array_split(np.arange(plan.replicates), workers)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(
                    pool.map(_statistic_batch, [(plan, i_n, c.tolist()) for c in chunks])
                )
            vals = np.concatenate(parts)
        by_n[plan.n_grid[i_n]] = vals
    return by_n


def _fit_exponent(ns, iqrs) -> tuple[float, float, float]:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(iqrs, dtype=float))
    res = sps.linregress(x, y)
    return float(res.slope), float(res.stderr), float(res.rvalue**2)


def _normalization(plan: ExperimentPlan, verdict: RegimeVerdict, n: int) -> float:
    """Scale dividing the raw statistic so it converges to the limit law."""
    model, stat = plan.model, plan.statistic
    if verdict.regime in ("stable_levy", "positive_stable_no_centering"):
        if stat.kind == "sum":
            return NormalizingSequence(model, "marginal")(n)
        if stat.kind == "abs_sum":
            return NormalizingSequence(model, "marginal")(n) ** stat.p
        return NormalizingSequence(model, "product")(n) ** stat.p / n
    if verdict.regime == "hermite_limit":
        rho = theoretical_covariance(model.gaussian, n)
        if stat.kind == "abs_sum":
            return n * rho ** (verdict.tau / 2.0)
        return rho ** (verdict.tau / 2.0)  # autocov and t_part carry the 1/n
    # short-memory Gaussian
    return math.sqrt(n) if stat.kind != "autocov" else 1.0 / math.sqrt(n)


def _reference_sample(
    plan: ExperimentPlan, verdict: RegimeVerdict, rng: np.random.Generator
) -> np.ndarray:
    model, stat = plan.model, plan.statistic
    size = plan.reference_size
    if verdict.regime == "stable_levy":
        if stat.kind == "sum":
            law = StableLaw(model.tail.alpha, 2.0 * model.tail.beta - 1.0)
        else:
            law = StableLaw(model.tail.alpha / stat.p, 1.0)
        return sample_stable(law, rng, size)
    if verdict.regime == "positive_stable_no_centering":
        return sample_stable(StableLaw(model.tail.alpha / stat.p, 1.0), rng, size)
    if verdict.regime == "hermite_limit":
        tau = verdict.tau if verdict.tau is not None else 1
        if verdict.hurst is None:
            raise ValueError("the Hermite reference needs a long-memory model")
        if tau == 1:
            return rng.standard_normal(size) * hermite_marginal_std(1, verdict.hurst)
        return sample_hermite_marginal(
            tau,
            verdict.hurst,
            size=size,
            rng=rng,
            n_internal=plan.reference_n_internal,
        )
    return rng.standard_normal(size)


def _affine_standardize(x: np.ndarray) -> np.ndarray:
    med = np.median(x)
    iqr = sps.iqr(x)
    return (x - med) / (iqr if iqr > 0 else 1.0)


def _hermite_scale_expected(model: SvModel, stat: StatisticSpec, tau: int) -> float:
    """|J_tau(sigma^p)| * E|Z|^p / tau!, the limit scale of the Hermite regime."""
    rep = hermite_coefficients(
        lambda x: sigma_pow(model.volatility, x, stat.p), q_max=max(tau, 1), check_order=False
    )
    j_tau = rep.coefficients[tau]
    m_p = coupled_abs_moment(model.tail, model.coupling, stat.p)
    return abs(j_tau) * m_p / math.factorial(tau)


def run_plan(plan: ExperimentPlan, workers: int = 1) -> McSummary:
    """Execute the plan: replicate, fit the scaling exponent, test the limit.

    Cells where any replicate overflows are recorded and excluded from the
    regression with a warning. verdict_match is True only when the
    regression is clean (R^2 above threshold), the exponent matches the
    predicted rate within tolerance, and the distance test (if any) accepts;
    a poor regression yields None (inconclusive), never a silent pass.
    """
    t0 = time.time()
    verdict = predict_verdict(plan.model, plan.statistic)
    by_n = _collect_statistics(plan, workers)

    ns, iqrs, medians, infinite = [], [], [], []
    for n in plan.n_grid:
        vals = by_n[n]
        bad = int(np.count_nonzero(~np.isfinite(vals)))
        infinite.append(bad)
        good = vals[np.isfinite(vals)]
        if bad:
            warnings.warn(
                f"{bad} replicates at n={n} overflowed; cell excluded from regression",
                RuntimeWarning,
            )
            continue
        ns.append(n)
        iqrs.append(float(sps.iqr(good)))
        medians.append(float(np.median(good)))
    if len(ns) < 2:
        raise RuntimeError("not enough finite cells to fit a scaling exponent")
    slope, slope_se, r2 = _fit_exponent(ns, iqrs)

    distance_stat = distance_p = None
    scale_ratio = None
    n_max = ns[-1]
    vals = by_n[n_max]
    vals = vals[np.isfinite(vals)]
    norm = _normalization(plan, verdict, n_max)
    normalized = vals / norm
    if plan.distance != "none":
        rng = np.random.default_rng(np.random.SeedSequence((plan.master_seed, 987654321)))
        ref_verdict = verdict
        if plan.reference_regime is not None and plan.reference_regime != verdict.regime:
            ref_verdict = _model_replace(verdict, regime=plan.reference_regime)
        ref = _reference_sample(plan, ref_verdict, rng)
        a, b = normalized, ref
        if plan.affine_fit:
            a, b = _affine_standardize(a), _affine_standardize(b)
        if plan.distance == "ks":
            res = sps.ks_2samp(a, b)
            distance_stat, distance_p = float(res.statistic), float(res.pvalue)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = sps.anderson_ksamp([a, b])
            distance_stat, distance_p = float(res.statistic), float(res.significance_level)
        if verdict.regime == "hermite_limit" and plan.statistic.kind == "abs_sum":
            expected = _hermite_scale_expected(plan.model, plan.statistic, verdict.tau)
            ref_iqr = sps.iqr(ref) if verdict.tau > 1 else (
                2.0 * sps.norm.ppf(0.75) * hermite_marginal_std(1, verdict.hurst)
            )
            fitted_scale = sps.iqr(normalized) / ref_iqr
            scale_ratio = float(fitted_scale / expected)

    # the autocovariance statistic carries a 1/n, so its raw growth
    # exponent is the normalization rate minus one
    expected_slope = verdict.rate_exponent - (
        1.0 if plan.statistic.kind in ("autocov", "t_part") else 0.0
    )
    exponent_ok = abs(slope - expected_slope) <= plan.exponent_tol
    distance_ok = distance_p is None or distance_p > plan.distance_p_threshold
    if r2 <= plan.r2_threshold:
        match = None
    else:
        match = bool(exponent_ok and distance_ok)
    return McSummary(
        plan=plan,
        verdict=verdict,
        n_grid=tuple(ns),
        iqrs=iqrs,
        medians=medians,
        infinite_cells=infinite,
        fitted_exponent=slope,
        exponent_se=slope_se,
        expected_slope=expected_slope,
        r_squared=r2,
        distance_stat=distance_stat,
        distance_p=distance_p,
        scale_ratio=scale_ratio,
        verdict_match=match,
        runtime_seconds=time.time() - t0,
        statistics_by_n=by_n,
    )


def dichotomy_scan(
    model: SvModel,
    p: float,
    h_grid,
    statistic: str = "autocov",
    lag: int = 1,
    couplings: tuple = None,
    replicates: int = 0,
    n_grid: tuple[int, ...] = (2**12, 2**14, 2**16),
    master_seed: int = 0,
    boundary_margin: float = 0.02,
    workers: int = 1,
) -> list[dict]:
    """Predicted (and optionally fitted) regimes across a Hurst grid.

    For the sample-covariance statistic the scan runs the model's own
    coupling against the independent one, exposing where the leverage
    dichotomy boundary differs from the LMSV boundary. Requires
    p < alpha < 2p; every H must stay `boundary_margin` away from each
    coupling's predicted boundary.
    """
    alpha = model.tail.alpha
    if not (p < alpha < 2.0 * p):
        raise ValueError("dichotomy scan requires p < alpha < 2p")
    if couplings is None:
        pairs = [("independent", replace_coupling(model, "independent"))]
        if not model.is_lmsv:
            pairs.append((model.coupling.kind, model))
    else:
        pairs = [(c.kind, replace_model_coupling(model, c)) for c in couplings]
    rows = []
    for name, mdl in pairs:
        for h in h_grid:
            mdl_h = _model_replace(mdl, gaussian=replace_spec_hurst(mdl.gaussian, h))
            stat = StatisticSpec(kind=statistic, p=p, lag=lag)
            verdict = predict_verdict(mdl_h, stat)
            tau = verdict.tau
            boundary = 1.0 - (1.0 - p / alpha) / tau
            if abs(h - boundary) < boundary_margin:
                raise ValueError(
                    f"H={h} within {boundary_margin} of the predicted boundary {boundary:.4f}"
                )
            row = {
                "coupling": name,
                "hurst": h,
                "tau": tau,
                "regime": verdict.regime,
                "rate_exponent": verdict.rate_exponent,
                "boundary": boundary,
            }
            if replicates > 0:
                plan = ExperimentPlan(
                    model=mdl_h,
                    statistic=stat,
                    n_grid=n_grid,
                    replicates=replicates,
                    master_seed=master_seed,
                    distance="none",
                )
                summary = run_plan(plan, workers=workers)
                row["fitted_exponent"] = summary.fitted_exponent
                row["exponent_se"] = summary.exponent_se
                row["expected_slope"] = summary.expected_slope
                row["r_squared"] = summary.r_squared
                row["verdict_match"] = summary.verdict_match
            rows.append(row)
    return rows


def replace_spec_hurst(spec, hurst):
    return _model_replace(spec, hurst=hurst)


def replace_coupling(model: SvModel, kind: str) -> SvModel:
    from .tails import LeverageCoupling

    return _model_replace(model, coupling=LeverageCoupling(kind=kind))


def replace_model_coupling(model: SvModel, coupling) -> SvModel:
    return _model_replace(model, coupling=coupling)


def poisson_diagnostics(patterns: list[PointPattern], boxes: list[tuple]) -> dict:
    """Replicate counts in time x mark boxes: dispersion and correlations.

    Boxes are (t_lo, t_hi, coordinate, level) with the level bounded away
    from zero. Under the Poisson limit the index of dispersion var/mean is
    1; its CI uses the chi-square approximation. Boxes with expected count
    below 5 are flagged unreliable.
    """
    r = len(patterns)
    if r < 2:
        raise ValueError("need at least 2 replicate patterns")
    counts = np.empty((r, len(boxes)), dtype=float)
    for i, pat in enumerate(patterns):
        for j, (t_lo, t_hi, coord, level) in enumerate(boxes):
            counts[i, j] = pat.count_in_box(t_lo, t_hi, coord, level)
    means = counts.mean(axis=0)
    variances = counts.var(axis=0, ddof=1)
    dispersion = variances / np.maximum(means, 1e-300)
    lo = sps.chi2.ppf(0.025, r - 1) / (r - 1)
    hi = sps.chi2.ppf(0.975, r - 1) / (r - 1)
    corr = np.corrcoef(counts.T) if len(boxes) > 1 else np.ones((1, 1))
    off = corr[~np.eye(len(boxes), dtype=bool)] if len(boxes) > 1 else np.array([])
    return {
        "boxes": boxes,
        "mean_counts": means.tolist(),
        "dispersion": dispersion.tolist(),
        "dispersion_ci": (float(lo), float(hi)),
        "dispersion_ok": [bool(lo <= d <= hi) for d in dispersion],
        "low_expected": [bool(m < 5) for m in means],
        "max_abs_cross_correlation": float(np.max(np.abs(off))) if off.size else 0.0,
        "correlation_se": 1.0 / math.sqrt(r),
    }


def no_common_jump_test(
    patterns_by_n: dict[int, list[PointPattern]], bound: float = 0.01
) -> dict:
    """Pooled fraction of points with two simultaneous product exceedances.

    Asserts the fraction decreases along the n-grid and ends below the
    bound: the empirical footprint of asymptotically independent product
    coordinates (one nonzero coordinate per limit point).
    """
    if len(patterns_by_n) < 3:
        raise ValueError("need at least 3 grid points")
    ns = sorted(patterns_by_n)
    fractions = []
    for n in ns:
        pats = patterns_by_n[n]
        total = sum(len(p) for p in pats)
        multi = sum(
            int(np.count_nonzero(np.sum(np.abs(p.marks[:, 1:]) > p.threshold, axis=1) >= 2))
            for p in pats
            if len(p)
        )
        fractions.append(multi / total if total else 0.0)
    decreasing = all(b <= a for a, b in zip(fractions, fractions[1:]))
    return {
        "n_grid": ns,
        "fractions": fractions,
        "monotone_decreasing": bool(decreasing),
        "final_below_bound": bool(fractions[-1] < bound),
        "bound": bound,
    }
