"""Exceedance point patterns of the rescaled sequence.

Extracts the marked point pattern (i/n, Y_i/a_n, Y_i Y_{i+1}/b_n, ...) over
replicate paths, checks Poisson behaviour of box counts (index of
dispersion near 1, no cross-box correlation), and tracks the fraction of
points with two simultaneous product exceedances, which must vanish as n
grows (asymptotic independence of the product coordinates).
"""

import numpy as np

from lmsvlab import (
    LeverageCoupling,
    LongMemorySpec,
    NormalizingSequence,
    SvModel,
    TailLaw,
    VolatilityFn,
    extract_point_pattern,
    no_common_jump_test,
    poisson_diagnostics,
    simulate_sv,
)

law = TailLaw(alpha=1.5, beta=1.0)
model = SvModel(
    LongMemorySpec(hurst=0.8, truncation_m=50_000), law,
    LeverageCoupling(), VolatilityFn.exp(),
)
h, u = 2, 0.5
a_seq = NormalizingSequence(model, "marginal", mc_factor=50)
b_seq = NormalizingSequence(model, "product", mc_factor=50)

patterns_by_n = {}
for n in (2**11, 2**13, 2**15):
    a_n, b_n = a_seq(n), b_seq(n)
    pats = []
    for rep in range(60):
        seed = np.random.SeedSequence(entropy=7, spawn_key=(n, rep))
        path = simulate_sv(model, n + h, seed)
        pats.append(extract_point_pattern(path, a_n, b_n, h, u))
    patterns_by_n[n] = pats
    sizes = [len(p) for p in pats]
    print(f"n={n:>6}: a_n={a_n:9.1f} b_n={b_n:11.1f} mean retained points {np.mean(sizes):.1f}")

n_max = max(patterns_by_n)
box_level = 0.22  # low enough that expected counts exceed 5
boxes = [(0.0, 0.5, 0, box_level), (0.5, 1.0, 0, box_level)]
diag = poisson_diagnostics(patterns_by_n[n_max], boxes)
print("\nPoisson box diagnostics at the largest n (first coordinate):")
for box, m, d, ok in zip(boxes, diag["mean_counts"], diag["dispersion"], diag["dispersion_ok"]):
    print(f"  time {box[0]:.1f}-{box[1]:.1f}: mean count {m:.2f}, dispersion {d:.2f}, CI ok: {ok}")
print(f"  max |cross-box correlation| = {diag['max_abs_cross_correlation']:.3f} "
      f"(4 SE = {4 * diag['correlation_se']:.3f})")

jumps = no_common_jump_test(patterns_by_n, bound=0.1)
print("\nsimultaneous product exceedances per retained point:")
for n, f in zip(jumps["n_grid"], jumps["fractions"]):
    print(f"  n={n:>6}: fraction {f:.4f}")
print(f"monotone decreasing: {jumps['monotone_decreasing']}, "
      f"final below bound ({jumps['bound']}): {jumps['final_below_bound']}")
print("(the acceptance suite pushes n to 2^18, where the fraction drops below 0.01)")
