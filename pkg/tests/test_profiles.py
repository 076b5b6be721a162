import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from blockdrift.errors import DomainError
from blockdrift.profiles import (
    CANONICAL_KINDS,
    check_admissible,
    cumulative,
    custom_profile,
    delta_max,
    eval_profile,
    get_profile,
    grid_signal_constant,
    integral,
    l2_norm,
    signal_constant,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@pytest.mark.parametrize(
    "kind, t, expected",
    [("linear", 0.5, 0.0), ("step", 0.25, -1.0), ("sinusoidal", 0.25, 1.0), ("step", 0.5, 1.0)],
)
def test_eval_examples(kind, t, expected):
    assert eval_profile(get_profile(kind), t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("t", [-1e-9, 1.0000001, 2.0])
def test_eval_outside_domain(t):
    with pytest.raises(DomainError):
        eval_profile(get_profile("linear"), t)


@pytest.mark.parametrize(
    "kind, t, expected",
    [("linear", 0.5, -0.25), ("sinusoidal", 0.5, 1 / math.pi), ("step", 0.0, 0.0), ("linear", 0.0, 0.0)],
)
def test_cumulative_examples(kind, t, expected):
    assert cumulative(get_profile(kind), t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("kind, a", [("linear", 0.25), ("sinusoidal", 1 / math.pi), ("step", 0.5)])
def test_signal_constants(kind, a):
    g = get_profile(kind)
    assert signal_constant(g) == a
    assert abs(grid_signal_constant(g, 100_000) - a) < 1e-4


@pytest.mark.parametrize("kind", CANONICAL_KINDS)
def test_mean_zero_and_endpoint(kind):
    g = get_profile(kind)
    assert abs(integral(g)) < 1e-9
    assert abs(cumulative(g, 1.0)) < 1e-9


@pytest.mark.parametrize("kind", CANONICAL_KINDS)
@given(t=unit)
def test_closed_form_matches_quadrature(kind, t):
    g = get_profile(kind)
    assert cumulative(g, t) == pytest.approx(integral(g, upper=t), abs=1e-9)


@pytest.mark.parametrize("kind", CANONICAL_KINDS)
def test_signal_constant_sign_flip(kind):
    g = get_profile(kind)
    assert signal_constant(g.negated()) == pytest.approx(signal_constant(g), abs=1e-4)


def test_l2_norms():
    assert l2_norm(get_profile("linear")) == pytest.approx(1 / math.sqrt(3), abs=1e-9)
    assert l2_norm(get_profile("sinusoidal")) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert l2_norm(get_profile("step")) == pytest.approx(1.0, abs=1e-9)


def test_admissibility_examples():
    rep = check_admissible(get_profile("linear"), L=2.0, c=0.5)
    assert rep.admissible and all(rep.passes.values())
    assert rep.lipschitz_est == pytest.approx(2.0)

    rep = check_admissible(get_profile("sinusoidal"), L=2 * math.pi, c=0.7)
    assert rep.admissible
    assert rep.l2_norm == pytest.approx(0.7071, abs=1e-4)

    rep = check_admissible(get_profile("step"), L=10.0, c=0.5)
    assert math.isinf(rep.lipschitz_est)
    assert rep.lipschitz_exempt and not rep.passes["lipschitz"]
    assert rep.admissible
    assert "Lipschitz" in rep.note


def test_defaults_admit_all_canonical():
    for g in map(get_profile, CANONICAL_KINDS):
        assert check_admissible(g).admissible


def test_admissibility_rejects_bad_parameters():
    with pytest.raises(DomainError):
        check_admissible(get_profile("linear"), L=0.0, c=0.5)


@pytest.mark.parametrize("e0, expected", [(0.05, 0.05), (0.5, 0.5), (0.9, 0.1)])
def test_delta_max(e0, expected):
    assert delta_max(e0) == pytest.approx(expected)


@pytest.mark.parametrize("e0", [0.0, 1.0, -0.1, 1.5])
def test_delta_max_domain(e0):
    with pytest.raises(DomainError):
        delta_max(e0)


def test_custom_tabulated_profile():
    # triangle wave: up then down, mean zero
    g = custom_profile([0.0, 0.25, 0.75, 1.0], [0.0, 1.0, -1.0, 0.0], label="triangle")
    assert g.kind == "custom"
    assert cumulative(g, 1.0) == pytest.approx(0.0, abs=1e-9)
    assert signal_constant(g) == pytest.approx(0.25, abs=1e-6)
    assert check_admissible(g, L=4.0 + 1e-6, c=0.5).admissible
    clone = pickle.loads(pickle.dumps(g))
    assert np.allclose(clone(np.linspace(0, 1, 11)), g(np.linspace(0, 1, 11)))


def test_custom_callable_profile():
    g = custom_profile(lambda t: np.cos(2 * np.pi * t), label="cos")
    assert signal_constant(g) == pytest.approx(1 / (2 * math.pi), abs=1e-6)


@pytest.mark.parametrize(
    "ts, vs",
    [([0.0, 1.0], [0.5, 0.5]), ([0.0, 0.5, 1.0], [-2.0, 0.0, 2.0]), ([0.1, 1.0], [1.0, -1.0])],
)
def test_custom_profile_validation(ts, vs):
    with pytest.raises(DomainError):
        custom_profile(ts, vs)


def test_canonical_profiles_pickle_by_name():
    for kind in CANONICAL_KINDS:
        g = get_profile(kind)
        assert pickle.loads(pickle.dumps(g)) == g


def test_aliases_and_unknown():
    assert get_profile("sin").kind == "sinusoidal"
    assert get_profile(" Linear ").kind == "linear"
    with pytest.raises(KeyError):
        get_profile("sawtooth")


@given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=12))
def test_random_tabulated_profiles_respect_bounds(raw):
    # centre a random polyline (trapezoid mean), then rescale into the unit ball
    ts = np.linspace(0.0, 1.0, len(raw))
    vs = np.asarray(raw) - trapezoid(raw, ts)
    peak = np.max(np.abs(vs))
    if peak < 1e-6:
        return
    g = custom_profile(ts, vs / peak)
    assert l2_norm(g) <= 1.0 + 1e-9
    # |G(t)| <= min(t, 1 - t) for any mean-zero g with sup |g| <= 1
    assert signal_constant(g) <= 0.5 + 1e-9
