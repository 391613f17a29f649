"""Hermite ranks of the product kernels and the limit-regime map.

The rate dichotomy for sample covariances is decided by the Hermite rank of
a conditional-expectation kernel. For exponential volatility the rank is 1
with or without leverage; for quadratic volatility it is 2 under
independence but drops to 1 under a leverage coupling with E[eta|Z|] != 0,
which shifts the stable/Hermite boundary from 2H-1 = 1/alpha to H = 1/alpha.
"""

import numpy as np

from lmsvlab import (
    LeverageCoupling,
    LongMemorySpec,
    SvModel,
    TailLaw,
    VolatilityFn,
    classify_regime,
    kernel_rank,
)
from lmsvlab.asymptotics import BoundaryRegimeError

gspec = LongMemorySpec(hurst=0.8, truncation_m=4000)
law = TailLaw(alpha=1.5, beta=1.0)
mix = LeverageCoupling(kind="polynomial_mix", psi1=(1.0, 0.5))

print("kernel Hermite ranks (lag 1..3):")
cases = [
    ("exp,  independent", VolatilityFn.exp(), LeverageCoupling(), "lmsv"),
    ("exp,  leverage   ", VolatilityFn.exp(), mix, "leverage"),
    ("x^2,  independent", VolatilityFn.even_power(1), LeverageCoupling(), "lmsv"),
    ("x^2,  leverage   ", VolatilityFn.even_power(1), mix, "leverage"),
]
for name, fn, coupling, variant in cases:
    model = SvModel(gspec, law, coupling, fn)
    ranks = [kernel_rank(model, variant, 1.0, s).rank for s in (1, 2, 3)]
    print(f"  {name}: ranks {ranks}")

print("\nregime map for the lag-1 |Y| autocovariance (p=1, alpha=1.5):")
print("  H      x^2 indep (tau=2)        x^2 leverage (tau=1)")
for h in np.arange(0.55, 0.96, 0.05):
    row = [f"  {h:.2f}"]
    for tau in (2, 1):
        try:
            v = classify_regime(1.0, 1.5, float(h), tau, statistic="autocov")
            row.append(f"{v.regime:<24}")
        except BoundaryRegimeError:
            row.append(f"{'(boundary)':<24}")
    print(" ".join(row))

print("\nboundaries: leverage flips at H = 1/alpha = {:.3f}; "
      "independence at H = (1+1/alpha)/2 = {:.3f}".format(1 / 1.5, (1 + 1 / 1.5) / 2))
