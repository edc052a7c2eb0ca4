import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonlearn.fock import MotionalState, coherent_state, fock_state, overlap_exact
from bosonlearn.pulses import TrapConfig
from bosonlearn.swap import (
    OverlapEstimate,
    delay_scan,
    ground_probability_exact,
    make_overlap_fn,
    overlap_matrix,
    swap_test_exact,
    swap_test_sampled,
)

TRAP = TrapConfig()


def random_state(rng, dim):
    return MotionalState.canonical(rng.normal(size=dim) + 1j * rng.normal(size=dim))


# ------------------------------------------------------------------- exact

def test_identical_states_estimate_one():
    s = coherent_state(0.9)
    est = swap_test_exact(s, s)
    assert est.estimate == pytest.approx(1.0, abs=1e-12)
    assert est.shots == 0
    assert est.conf_low == est.conf_high == est.estimate


def test_orthogonal_states():
    est = swap_test_exact(fock_state(0, 2), fock_state(1, 2))
    assert est.estimate == pytest.approx(0.0, abs=1e-12)
    assert est.p_ground == pytest.approx(0.5, abs=1e-12)


def test_coherent_pair_closed_form():
    est = swap_test_exact(coherent_state(1.5, dim=32), coherent_state(1.0, dim=32))
    assert est.estimate == pytest.approx(math.exp(-0.25), abs=1e-9)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_swap_equals_direct_overlap(d1, d2, seed):
    rng = np.random.default_rng(seed)
    s1, s2 = random_state(rng, d1), random_state(rng, d2)
    assert swap_test_exact(s1, s2).estimate == pytest.approx(overlap_exact(s1, s2), abs=1e-9)


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_swap_symmetric(dim, seed):
    rng = np.random.default_rng(seed)
    s1, s2 = random_state(rng, dim), random_state(rng, dim)
    assert swap_test_exact(s1, s2).estimate == pytest.approx(
        swap_test_exact(s2, s1).estimate, abs=1e-9
    )


@given(st.floats(0.0, 2 * math.pi), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_spin_basis_phase_leaves_pg_unchanged(psi_s, seed):
    rng = np.random.default_rng(seed)
    s1, s2 = random_state(rng, 4), random_state(rng, 4)
    assert ground_probability_exact(s1, s2, psi_s=psi_s) == pytest.approx(
        ground_probability_exact(s1, s2), abs=1e-9
    )


def test_unequal_dims_padded():
    est = swap_test_exact(fock_state(0, 2), coherent_state(1.1))
    assert est.estimate == pytest.approx(math.exp(-1.21), abs=2e-5)


# ----------------------------------------------------------------- sampled

def test_sampled_requires_shots_and_seed():
    s = fock_state(0, 2)
    with pytest.raises(ValueError):
        swap_test_sampled(s, s, 0, 1)
    with pytest.raises(ValueError):
        make_overlap_fn(700, None)


def test_sampled_degenerate_bernoulli_zero_width():
    s = coherent_state(0.7)
    est = swap_test_sampled(s, s, 700, 42)
    assert est.estimate == 1.0
    assert est.conf_low == est.conf_high == 1.0


def test_sampled_orthogonal_within_binomial_bound():
    est = swap_test_sampled(fock_state(0, 2), fock_state(1, 2), 700, 7)
    assert abs(est.estimate - 0.0) <= 3 / math.sqrt(700)
    assert 0.0 <= est.conf_low <= est.estimate <= est.conf_high <= 1.0


def test_sampled_deterministic_given_seed():
    s1, s2 = coherent_state(1.2), coherent_state(0.8)
    a = swap_test_sampled(s1, s2, 700, 123)
    b = swap_test_sampled(s1, s2, 700, 123)
    assert a == b


def test_sampled_large_shot_consistency():
    s1, s2 = coherent_state(1.2), coherent_state(0.8)
    exact = swap_test_exact(s1, s2).estimate
    est = swap_test_sampled(s1, s2, 10**6, 3)
    assert abs(est.estimate - exact) <= 5e-3


def test_sampled_mean_bias_nonnegative_near_zero():
    # absolute-value folding biases the estimator upward near overlap 0
    s1, s2 = fock_state(0, 2), fock_state(1, 2)
    exact = swap_test_exact(s1, s2).estimate
    mean = np.mean([swap_test_sampled(s1, s2, 700, k).estimate for k in range(1000)])
    assert mean + 0.01 >= exact


def test_estimate_always_in_unit_interval():
    rng = np.random.default_rng(8)
    for seed in range(25):
        s1, s2 = random_state(rng, 3), random_state(rng, 3)
        est = swap_test_sampled(s1, s2, 50, seed)
        assert 0.0 <= est.estimate <= 1.0
        assert 0.0 <= est.conf_low <= est.conf_high <= 1.0


def test_overlap_estimate_invariants_enforced():
    with pytest.raises(ValueError):
        OverlapEstimate(estimate=0.5, p_ground=0.5, shots=10, conf_low=0.4, conf_high=0.6)
    with pytest.raises(ValueError):
        OverlapEstimate(estimate=0.0, p_ground=0.5, shots=10, conf_low=0.2, conf_high=0.6)


def test_overlap_fn_exact_ignores_key_and_rng(monkeypatch):
    import numpy.random as npr

    def boom(*a, **k):
        raise AssertionError("exact mode must not touch the RNG")

    monkeypatch.setattr(npr, "default_rng", boom)
    monkeypatch.setattr(npr, "SeedSequence", boom)
    fn = make_overlap_fn(0)
    s1, s2 = fock_state(0, 2), fock_state(1, 2)
    assert fn(s1, s2, (3, 4, 5)) == pytest.approx(0.0, abs=1e-12)


def test_overlap_fn_sampled_key_independence_of_order():
    s1, s2 = coherent_state(1.2), coherent_state(0.9)
    fn = make_overlap_fn(700, 99)
    first = [fn(s1, s2, (0, m, 0)) for m in range(4)]
    second = [fn(s1, s2, (0, m, 0)) for m in reversed(range(4))]
    assert first == list(reversed(second))


# -------------------------------------------------------------- delay scan

def test_delay_scan_zero_delay_identity():
    s = MotionalState.canonical([1.0, 1.0, 1.0, 1.0])
    series = delay_scan(s, s, TRAP, [0.0])
    assert series[0][1] == pytest.approx(1.0, abs=1e-9)


def test_delay_scan_period_matches_beat_frequency():
    s = MotionalState.canonical([1.0, 1.0, 1.0, 1.0])
    period = 2 * math.pi / abs(TRAP.omega_c - TRAP.omega_b)
    series = delay_scan(s, s, TRAP, [period])
    assert series[0][1] == pytest.approx(1.0, abs=1e-9)
    quarter = delay_scan(s, s, TRAP, [period / 2])
    assert quarter[0][1] < 0.2


def test_delay_scan_alternating_state_shifted_half_period():
    phi1 = MotionalState.canonical([1.0, 1.0, 1.0, 1.0])
    phi2 = MotionalState.canonical([1.0, -1.0, 1.0, -1.0])
    period = 2 * math.pi / abs(TRAP.omega_c - TRAP.omega_b)
    at_half = delay_scan(phi1, phi2, TRAP, [period / 2])
    assert at_half[0][1] == pytest.approx(1.0, abs=1e-9)
    at_zero = delay_scan(phi1, phi2, TRAP, [0.0])
    assert at_zero[0][1] == pytest.approx(0.0, abs=1e-9)


# ------------------------------------------------------------------- batch

def test_overlap_matrix_exact_records():
    rows = [("a", fock_state(0, 2)), ("b", fock_state(1, 2))]
    cols = [("x", fock_state(0, 2))]
    records = overlap_matrix(rows, cols)
    assert len(records) == 2
    by_row = {r["row"]: r for r in records}
    assert by_row["a"]["estimate"] == pytest.approx(1.0, abs=1e-12)
    assert by_row["b"]["estimate"] == pytest.approx(0.0, abs=1e-12)
    assert all(r["shots"] == 0 for r in records)


def test_overlap_matrix_sampled_deterministic():
    rows = [("a", coherent_state(1.0)), ("b", coherent_state(1.4))]
    cols = rows
    rec1 = overlap_matrix(rows, cols, shots=500, master_seed=5)
    rec2 = overlap_matrix(rows, cols, shots=500, master_seed=5)
    assert rec1 == rec2
