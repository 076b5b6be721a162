import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockdrift import rng
from blockdrift.errors import AdmissibilityError, DomainError
from blockdrift.model import (
    ModelParams,
    TrialBlock,
    baseline_variance,
    error_prob,
    iter_bit_batches,
    probabilities,
    sample_bits,
    sample_block,
)
from blockdrift.profiles import custom_profile, get_profile


@pytest.mark.parametrize(
    "delta, kind, i, expected",
    [(0.02, "linear", 2, 0.05), (0.02, "step", 1, 0.03), (0.0, "sinusoidal", 3, 0.05)],
)
def test_error_prob_examples(delta, kind, i, expected):
    params = ModelParams(e0=0.05, n=4, delta=delta, profile=get_profile(kind))
    assert error_prob(params, i) == pytest.approx(expected, abs=1e-15)


def test_error_prob_index_range():
    params = ModelParams(e0=0.05, n=4)
    for i in (0, 5):
        with pytest.raises(DomainError):
            error_prob(params, i)


def test_amplitude_above_ceiling_is_rejected():
    with pytest.raises(AdmissibilityError):
        ModelParams(e0=0.05, n=10, delta=0.0501, profile=get_profile("step"))


def test_no_silent_clamping():
    # a custom shape slightly above 1 in sup norm would be rejected at build time;
    # bypass that check to make sure the model itself refuses out-of-range p_i
    bad = get_profile("step").__class__(kind="custom", func=lambda t: 1.5 * np.sign(t - 0.5), label="bad")
    params = ModelParams(e0=0.05, n=10, delta=0.05, profile=bad)
    with pytest.raises(AdmissibilityError):
        probabilities(params)
    with pytest.raises(AdmissibilityError):
        error_prob(params, 1)


@pytest.mark.parametrize("e0, expected", [(0.5, 0.25), (0.05, 0.0475), (0.95, 0.0475)])
def test_baseline_variance(e0, expected):
    assert baseline_variance(e0) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("e0", [0.0, 1.0, 2.0])
def test_baseline_variance_domain(e0):
    with pytest.raises(DomainError):
        baseline_variance(e0)


@pytest.mark.parametrize("kwargs", [dict(e0=0.0, n=5), dict(e0=0.1, n=0), dict(e0=0.1, n=5, delta=-0.01)])
def test_params_validation(kwargs):
    with pytest.raises(DomainError):
        ModelParams(**kwargs)


def test_null_block_mean():
    block = sample_block(ModelParams(e0=0.05, n=1000), seed=11, replication_index=0)
    assert abs(block.bits.mean() - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 1000)


def test_step_at_ceiling_splits_halves():
    n = 20_000
    block = sample_block(ModelParams(e0=0.05, n=n, delta=0.05, profile="step"), seed=3, replication_index=0)
    half = n // 2
    # t_i < 1/2 for i < n/2 only, so the first n/2 - 1 trials have p_i = 0
    assert block.bits[: half - 1].sum() == 0
    assert block.bits[half - 1 :].mean() == pytest.approx(0.10, abs=0.015)


@given(seed=st.integers(0, 2**63 - 1), rep=st.integers(0, 10**6))
def test_sampling_is_deterministic(seed, rep):
    params = ModelParams(e0=0.2, n=64, delta=0.1, profile="sinusoidal")
    a = sample_block(params, seed, rep)
    b = sample_block(params, seed, rep)
    assert np.array_equal(a.bits, b.bits)


@given(seed=st.integers(0, 2**32), start=st.integers(0, 2000), count=st.integers(1, 40))
def test_matrix_rows_match_single_blocks(seed, start, count):
    params = ModelParams(e0=0.3, n=17, delta=0.2, profile="linear")
    mat = sample_bits(params, seed, count, start)
    for r in (0, count - 1):
        assert np.array_equal(mat[r], sample_block(params, seed, start + r).bits)


def test_batches_independent_of_batch_size():
    params = ModelParams(e0=0.1, n=33)
    a = np.vstack(list(iter_bit_batches(params, 5, 1000, batch=512)))
    b = np.vstack(list(iter_bit_batches(params, 5, 1000, batch=37)))
    assert np.array_equal(a, b)
    assert np.array_equal(a[999], sample_block(params, 5, 999).bits.astype(bool))


def test_zero_delta_equals_null_stream():
    null = ModelParams(e0=0.05, n=200)
    alt = ModelParams(e0=0.05, n=200, delta=0.0, profile="step")
    assert np.array_equal(sample_bits(null, 9, 50), sample_bits(alt, 9, 50))


def test_block_mean_preserved_under_drift():
    # E[e_hat] = e0 up to the O(1/n) Riemann error of the profile at t_i = i/n
    n, M = 1000, 10_000
    params = ModelParams(e0=0.05, n=n, delta=0.04, profile="linear")
    total = sum(int(b.sum()) for b in iter_bit_batches(params, 2024, M))
    grand = total / (n * M)
    p = probabilities(params)
    se = math.sqrt(np.sum(p * (1 - p))) / (n * math.sqrt(M))
    assert abs(grand - p.mean()) <= 4 * se
    assert abs(grand - 0.05) <= 4 * se + abs(p.mean() - 0.05)


def test_csv_roundtrip():
    block = sample_block(ModelParams(e0=0.3, n=25, delta=0.1, profile="step"), 42, 7)
    back = TrialBlock.from_csv_row(block.to_csv_row())
    assert np.array_equal(back.bits, block.bits)
    assert back.params == block.params
    assert (back.seed, back.replication_index) == (42, 7)
    assert set(block.to_csv_row()[-1]) <= {"0", "1"}


def test_derive_seed_is_stable_and_distinct():
    a = rng.derive_seed(1, "power", 1000, 0.05, "step", 0.01)
    assert a == rng.derive_seed(1, "power", 1000, 0.05, "step", 0.01)
    assert a != rng.derive_seed(1, "power", 1000, 0.05, "step", 0.0100001)
    assert a != rng.derive_seed(2, "power", 1000, 0.05, "step", 0.01)
    assert 0 <= a < 2**64


def test_custom_profile_blocks():
    g = custom_profile([0.0, 0.5, 1.0], [-1.0, 0.0, 1.0])
    block = sample_block(ModelParams(e0=0.4, n=50, delta=0.3, profile=g), 1, 0)
    assert block.bits.shape == (50,)
