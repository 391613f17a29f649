"""Heavy-tailed stochastic volatility laboratory.

Simulation of long-memory stochastic volatility models with and without
leverage, the asymptotic constants of their partial-sum and sample-
covariance limit theorems, and a Monte Carlo harness that verifies the
predicted limit regimes at desk scale.
"""

from .asymptotics import (
    BoundaryRegimeError,
    NormalizingSequence,
    RegimeVerdict,
    breiman_constant,
    classify_regime,
    product_tail_constants,
    rosenblatt_norm_constant,
    sigma_cross_moment,
)
from .estimators import (
    MTDecomposition,
    PartialSumProcess,
    PointPattern,
    SampleCovReport,
    abs_power_mean,
    extract_point_pattern,
    mt_decompose,
    partial_sums,
    sample_cov,
    tail_ratio_curve,
)
from .gaussian import (
    GaussianPath,
    LongMemorySpec,
    MemoryBudgetError,
    make_coefficients,
    simulate_exact,
    simulate_path,
    theoretical_covariance,
)
from .hermite import HermiteRankReport, hermite_coefficients
from .kernels import KernelSpec, build_kernel, kernel_eval, kernel_rank, product_moment
from .model import (
    SvModel,
    SvPath,
    VolatilityFn,
    sample_marginal,
    sample_product_pairs,
    sigma_eval,
    simulate_sv,
)
from .reference import (
    StableLaw,
    long_run_variance,
    sample_brownian_marginal,
    sample_hermite_marginal,
    sample_stable,
)
from .tails import (
    LeverageCoupling,
    TailLaw,
    moment,
    potter_bound_check,
    sample_pair,
    tail_function,
)
from .verify import (
    ExperimentPlan,
    McSummary,
    StatisticSpec,
    dichotomy_scan,
    no_common_jump_test,
    poisson_diagnostics,
    predict_verdict,
    run_plan,
)

__version__ = "0.1.0"
