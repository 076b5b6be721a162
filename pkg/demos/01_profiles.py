"""Drift shapes, their cumulative integrals and signal constants."""

import math

import numpy as np

from blockdrift import check_admissible, cumulative, custom_profile, delta_max, get_profile, signal_constant

# The three built-in shapes all integrate to zero, so the block average of the
# error probability is untouched by the drift.  What differs is how far the
# running integral G(t) wanders before coming back: that excursion, A(g), is
# what the CUSUM statistic can see.
for name in ("linear", "sinusoidal", "step"):
    g = get_profile(name)
    ts = np.linspace(0, 1, 5)
    print(f"{name:11s} g={np.round(g(ts), 3)}  G(1/2)={cumulative(g, 0.5):+.4f}  A={signal_constant(g):.4f}")

# The step concentrates its drift at the ends and has the largest A, so it
# should be the easiest to detect; the linear ramp has the smallest.
print("A(step)/A(linear) =", signal_constant(get_profile("step")) / signal_constant(get_profile("linear")))

# Membership in the drift class: Lipschitz bound L and energy floor c.
# The step is discontinuous and is reported with an explicit exemption.
for name in ("linear", "sinusoidal", "step"):
    rep = check_admissible(get_profile(name), L=2 * math.pi, c=0.5)
    print(f"{name:11s} lip={rep.lipschitz_est:.3f} l2={rep.l2_norm:.3f} admissible={rep.admissible} {rep.note[:40]}")

# A tabulated shape: a triangle wave.  Mean-zero and |g| <= 1 are enforced.
tri = custom_profile([0, 0.25, 0.75, 1], [0, 1, -1, 0], label="triangle")
print("triangle A =", round(signal_constant(tri), 6))

# The amplitude ceiling keeps e0 + delta*g inside [0, 1].
print("delta_max:", {e0: round(delta_max(e0), 12) for e0 in (0.02, 0.05, 0.1, 0.9)})
