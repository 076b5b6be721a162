import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockdrift.calibration import asymptotic_threshold, mc_threshold
from blockdrift.errors import AdmissibilityError, ConfigurationError, InsufficientDataError
from blockdrift.power import (
    DeltaMinEstimate,
    PowerPoint,
    collapse_dataset,
    collapse_spread,
    delta_min_hat,
    estimate_power,
    power_curve,
    rescaled_grid,
    scaling_slope,
    theory_grid,
    transition_band,
)
from blockdrift.profiles import delta_max


@pytest.fixture(scope="module")
def tau4000():
    return mc_threshold(4000, 0.05, 0.05, 10_000, seed=4000)


def _pt(delta, power, n=100, M1=1000):
    return PowerPoint(n=n, e0=0.05, profile="step", delta=delta, power=power,
                      se=math.sqrt(power * (1 - power) / M1), M1=M1, seed=0)


def _est(n, value):
    return DeltaMinEstimate(n=n, e0=0.05, profile="step", target_power=0.8, delta_min_hat=value, reached=True)


def test_zero_amplitude_power_is_size(tau4000):
    pt = estimate_power(4000, 0.05, "step", 0.0, tau4000, M1=5000, seed=1)
    assert abs(pt.power - tau4000.achieved_size) <= 3 * math.sqrt(0.05 * 0.95 / 5000)
    assert pt.se == pytest.approx(math.sqrt(pt.power * (1 - pt.power) / 5000))


def test_power_at_table_threshold(tau4000):
    pt = estimate_power(4000, 0.05, "step", 0.0107, tau4000, M1=5000, seed=2)
    assert abs(pt.power - 0.80) <= 0.04


def test_power_far_above_threshold(tau4000):
    assert estimate_power(4000, 0.05, "step", 0.05, tau4000, M1=2000, seed=3).power > 0.99


def test_estimate_power_guards(tau4000):
    with pytest.raises(AdmissibilityError):
        estimate_power(4000, 0.05, "step", 0.06, tau4000, M1=100)
    with pytest.raises(ConfigurationError):
        estimate_power(2000, 0.05, "step", 0.01, tau4000, M1=100)
    with pytest.raises(ConfigurationError):
        estimate_power(4000, 0.1, "step", 0.01, tau4000, M1=100)


def test_power_deterministic(tau4000):
    a = estimate_power(4000, 0.05, "linear", 0.02, tau4000, M1=500, seed=9)
    assert a == estimate_power(4000, 0.05, "linear", 0.02, tau4000, M1=500, seed=9)


@pytest.mark.parametrize("profile", ["linear", "sinusoidal", "step"])
def test_curve_monotone_and_endpoint(tau4000, profile):
    curve = power_curve(4000, 0.05, profile, tau4000, M1=2000, seed=11)
    p, se = curve.powers, curve.ses
    for i in range(len(p) - 1):
        assert p[i + 1] >= p[i] - 3 * math.hypot(se[i], se[i + 1])
    assert curve.deltas[-1] <= delta_max(0.05)
    assert np.all(np.diff(curve.deltas) > 0)


def test_endpoint_at_ceiling_has_high_power(tau4000):
    for profile in ("linear", "sinusoidal", "step"):
        assert estimate_power(4000, 0.05, profile, delta_max(0.05), tau4000, M1=2000, seed=5).power > 0.95


def test_theory_grid_caps_at_ceiling():
    g = theory_grid(250, 0.02, "linear")
    assert g[-1] == delta_max(0.02) and np.all(g <= 0.02)
    assert theory_grid(4000, 0.05, "step")[-1] < 0.05
    # nothing feasible: the empty curve is returned rather than an error
    assert theory_grid(4, 1e-4, "linear").size == 0
    curve = power_curve(4, 1e-4, "linear", asymptotic_threshold(4), M1=10)
    assert curve.empty and not delta_min_hat(curve).reached


def test_subset_rerun_matches_full_curve(tau4000):
    full = power_curve(4000, 0.05, "step", tau4000, M1=800, seed=21, refine=False)
    picked = full.deltas[[2, 5]]
    part = power_curve(4000, 0.05, "step", tau4000, grid=picked, M1=800, seed=21, refine=False)
    assert [p.power for p in part] == [full.points[2].power, full.points[5].power]


def test_refinement_inserts_bracket_midpoint(tau4000):
    coarse = power_curve(4000, 0.05, "sinusoidal", tau4000, M1=1000, seed=3, refine=False)
    fine = power_curve(4000, 0.05, "sinusoidal", tau4000, M1=1000, seed=3, refine=True)
    assert len(fine) == len(coarse) + 1
    est = delta_min_hat(fine)
    lo, plo, hi, phi = est.bracket
    assert plo < 0.8 <= phi and lo < est.delta_min_hat <= hi


def test_delta_min_interpolation():
    pts = [_pt(0.01, 0.3), _pt(0.02, 0.6), _pt(0.03, 0.9), _pt(0.04, 0.7), _pt(0.05, 0.95)]
    est = delta_min_hat(pts, 0.8)
    assert est.reached and not est.left_censored
    assert est.delta_min_hat == pytest.approx(0.02 + 0.2 / 0.3 * 0.01)
    assert est.bracket == (0.02, 0.6, 0.03, 0.9)


def test_delta_min_states():
    assert delta_min_hat([_pt(0.01, 0.1), _pt(0.02, 0.5)]).reason == "not-reached"
    est = delta_min_hat([_pt(0.01, 0.85), _pt(0.02, 0.99)])
    assert est.left_censored and est.delta_min_hat == 0.01
    with pytest.raises(ValueError):
        delta_min_hat([_pt(0.02, 0.5), _pt(0.01, 0.3)])


def test_scaling_slope_examples():
    fit = scaling_slope([_est(n, 0.7 / math.sqrt(n)) for n in (250, 1000, 4000)])
    assert abs(fit.slope + 0.5) <= 1e-12
    fit = scaling_slope([_est(n, 0.02) for n in (250, 1000, 4000)])
    assert abs(fit.slope) <= 1e-12
    with pytest.raises(InsufficientDataError):
        scaling_slope([_est(250, 0.05), _est(500, 0.04)])
    unreached = DeltaMinEstimate(n=8000, e0=0.05, profile="step", target_power=0.8, delta_min_hat=None, reached=False)
    with pytest.raises(InsufficientDataError):
        scaling_slope([_est(250, 0.05), _est(500, 0.04), unreached])


@given(st.floats(-2, 0), st.floats(1e-3, 1.0))
def test_scaling_slope_recovers_power_laws(b, c):
    fit = scaling_slope([_est(n, c * n**b) for n in (100, 300, 900, 2700)])
    assert fit.slope == pytest.approx(b, abs=1e-9)


def test_rescaled_grid_lattice():
    g = rescaled_grid(400, 0.05, step=0.1, upper=1.5)
    assert g[0] == 0.0
    assert np.allclose(g * 20, np.arange(len(g)) * 0.1)
    assert g[-1] <= 0.05


def test_collapse_rows_and_spread(tau4000):
    th1000 = mc_threshold(1000, 0.05, 0.05, 5000, seed=1000)
    grid = rescaled_grid(1000, 0.05, 0.05, 1.5)
    c1 = power_curve(1000, 0.05, "step", th1000, grid=grid, M1=1000, seed=1, refine=False)
    c4 = power_curve(4000, 0.05, "step", tau4000, grid=rescaled_grid(4000, 0.05, 0.05, 1.5), M1=1000, seed=1, refine=False)
    rows = collapse_dataset([c1, c4])
    zero = [r for r in rows if r.rescaled == 0.0]
    assert len(zero) == 2 and all(abs(r.power - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 1000) for r in zero)
    r = rows[5]
    assert r.snr == pytest.approx(0.5 * r.rescaled / math.sqrt(0.0475))
    band = transition_band(c4)
    assert band[0] < band[1]
    spread = collapse_spread([c1, c4], band)
    assert list(spread.values())[0] < 0.10
