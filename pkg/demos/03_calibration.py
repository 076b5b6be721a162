"""Level-0.05 thresholds: Monte Carlo versus the Brownian-bridge limit."""

from blockdrift.calibration import bridge_quantile, bridge_sup_cdf, mc_threshold, null_rejection_rate

q = bridge_quantile(0.05)
print(f"bridge quantile q_0.05 = {q:.6f}, cdf there = {bridge_sup_cdf(q):.8f}")

# The CUSUM statistic is discrete and the plug-in normalization matters at
# small n, so the finite-sample threshold sits below the limit and creeps up
# towards it as n grows.
for n in (250, 1000, 4000):
    th = mc_threshold(n, 0.05, alpha=0.05, M0=10_000, seed=n)
    fresh = null_rejection_rate(n, 0.05, th, M=10_000, seed=10 * n + 1)
    print(
        f"n={n:5d} tau={th.tau:.4f} calibration size={th.achieved_size:.4f} "
        f"fresh size={fresh.rate:.4f}+-{fresh.se:.4f} constant blocks={th.degenerate_fraction:.1%}"
    )

# At tiny e0*n most blocks contain no errors at all and carry no information.
try:
    mc_threshold(20, 0.01, M0=1000, seed=0)
except Exception as exc:  # CalibrationError
    print("refused:", exc)
