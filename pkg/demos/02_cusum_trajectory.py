"""One block under the null and one under sinusoidal drift."""

import sys

from blockdrift import ModelParams, decide, expected_excursion, get_profile, sample_block, statistic
from blockdrift.calibration import asymptotic_threshold
from blockdrift.plots import figure_trajectory

n, e0, delta = 2000, 0.05, 0.03
seed = 4

null = statistic(sample_block(ModelParams(e0=e0, n=n), seed, 0))
alt = statistic(sample_block(ModelParams(e0=e0, n=n, delta=delta, profile="sinusoidal"), seed, 1))

# Both traces are pinned to zero at k = n because the centering uses the
# block's own average.  Drift shows up as a bulge in the middle.
for label, tr in (("null", null), ("sinusoidal", alt)):
    print(f"{label:10s} e_hat={tr.e_hat:.4f} T={tr.t_stat:.3f} at k={tr.argmax_k} S_n={tr.partial_sums[-1]:.1e}")

# Leading drift excursion of max|S_k| against the noise scale sqrt(n e0 (1-e0)).
print("expected excursion", expected_excursion(n, delta, get_profile("sinusoidal")))
print("noise scale       ", (n * e0 * (1 - e0)) ** 0.5)

tau = asymptotic_threshold(n, 0.05)
print("decision (null):", decide(null, tau))
print("decision (drift):", decide(alt, tau))

if len(sys.argv) > 1:
    print("wrote", figure_trajectory(sys.argv[1], seed=seed, n=n, e0=e0, delta=delta))
