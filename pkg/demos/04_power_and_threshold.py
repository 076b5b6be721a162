"""Power curves, the detectability threshold and its n^-1/2 scaling."""

from blockdrift import delta_min_hat, mc_threshold, power_curve, scaling_slope
from blockdrift.theory import required_delta

e0 = 0.05
estimates = []
for n in (500, 1000, 2000, 4000):
    th = mc_threshold(n, e0, M0=10_000, seed=n)
    curve = power_curve(n, e0, "step", th, M1=2000, seed=1)
    est = delta_min_hat(curve, target_power=0.8)
    estimates.append(est)
    bound = required_delta(n, e0, 0.05, 0.2, 0.5)
    print(f"n={n:5d} points={len(curve):2d} delta_min={est.delta_min_hat:.4f} achievability bound={bound:.4f}")

# The empirical threshold sits below the conservative bound and falls like
# n^-1/2: the fitted log-log slope should be close to -0.5.
fit = scaling_slope(estimates)
print(f"slope {fit.slope:.3f}")

# A block too short for the drift to be seen within delta_max:
th = mc_threshold(250, 0.02, M0=10_000, seed=3)
est = delta_min_hat(power_curve(250, 0.02, "linear", th, M1=2000, seed=1))
print("n=250, e0=0.02, linear:", est.reason)
