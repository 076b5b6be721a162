"""Detecting mean-preserving drift inside blocks of Bernoulli trials.

The package simulates blockwise error indicators whose error probability
drifts as ``e0 + delta * g(t)`` with ``g`` integrating to zero, tests them
with a plug-in CUSUM statistic, calibrates level-alpha thresholds, and
estimates the smallest detectable drift amplitude.
"""

__version__ = "0.1.0"

from .calibration import (  # noqa: E402
    CalibratedThreshold,
    asymptotic_threshold,
    bridge_quantile,
    bridge_sup_cdf,
    mc_threshold,
    null_rejection_rate,
)
from .cusum import CusumTrace, decide, expected_excursion, partial_sums, statistic, statistics  # noqa: E402
from .model import ModelParams, TrialBlock, baseline_variance, error_prob, sample_bits, sample_block  # noqa: E402
from .power import (  # noqa: E402
    DeltaMinEstimate,
    PowerCurve,
    PowerPoint,
    ScalingFit,
    collapse_dataset,
    delta_min_hat,
    estimate_power,
    power_curve,
    scaling_slope,
)
from .profiles import (  # noqa: E402
    DriftProfile,
    check_admissible,
    cumulative,
    custom_profile,
    delta_max,
    eval_profile,
    get_profile,
    signal_constant,
)
from .theory import (  # noqa: E402
    exact_enumeration,
    kl_bernoulli,
    kl_block,
    kl_quadratic_approx,
    pinsker_tv_bound,
    required_delta,
)
