import math

import numpy as np
import pytest

from bosonlearn.characterize import (
    SidebandSignal,
    fit_populations,
    ramsey_stark_scan,
    sample_signal,
    sideband_signal,
    validate_distribution,
)
from bosonlearn.pulses import TrapConfig

TRAP = TrapConfig()
OMEGA = TRAP.omega_rsb
PERIOD = 2 * math.pi / OMEGA
TAUS = np.linspace(PERIOD / 240, 3 * PERIOD, 240)


def delta(j, size=7):
    p = np.zeros(size)
    p[j] = 1.0
    return p


def poisson(mean, size=7):
    p = np.array([math.exp(-mean) * mean**j / math.factorial(j) for j in range(size)])
    return p / p.sum()


# ----------------------------------------------------------------- signals

def test_red_signal_dark_ground_state():
    sig = sideband_signal(delta(0), OMEGA, 0.0, TAUS, "red")
    assert np.all(sig.pe == 0.0)


def test_red_signal_single_level_two_level_formula():
    sig = sideband_signal(delta(1), OMEGA, 0.0, TAUS, "red")
    np.testing.assert_allclose(sig.pe, (1 - np.cos(OMEGA * TAUS)) / 2, atol=1e-12)


def test_blue_signal_vacuum_two_level_formula():
    sig = sideband_signal(delta(0), OMEGA, 0.0, TAUS, "blue")
    np.testing.assert_allclose(sig.pe, (1 - np.cos(OMEGA * TAUS)) / 2, atol=1e-12)


def test_signal_range_and_decay():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = rng.dirichlet(np.ones(7))
        sig = sideband_signal(p, OMEGA, 120.0, TAUS, "red")
        assert np.all(sig.pe >= 0) and np.all(sig.pe <= 1)


def test_signal_validation():
    with pytest.raises(ValueError):
        sideband_signal([0.5, 0.6], OMEGA, 0.0, TAUS)  # not a distribution
    with pytest.raises(ValueError):
        SidebandSignal(TAUS[::-1], np.zeros_like(TAUS))  # decreasing taus
    with pytest.raises(ValueError):
        SidebandSignal(TAUS, np.full_like(TAUS, 1.5))  # out of range
    with pytest.raises(ValueError):
        validate_distribution([-0.2, 1.2])


def test_sample_signal_deterministic_and_valid():
    sig = sideband_signal(poisson(1.44), OMEGA, 0.0, TAUS, "red")
    a = sample_signal(sig, 500, 3)
    b = sample_signal(sig, 500, 3)
    np.testing.assert_array_equal(a.pe, b.pe)
    assert a.shots == 500
    assert np.all((a.pe >= 0) & (a.pe <= 1))


# --------------------------------------------------------------------- fit

def test_fit_recovers_poisson_noiseless():
    p = poisson(1.44)
    fit = fit_populations(sideband_signal(p, OMEGA, 0.0, TAUS, "red"))
    assert np.max(np.abs(fit.populations - p)) < 1e-3
    assert not fit.ill_conditioned


def test_fit_recovers_single_level_exactly():
    p = delta(2)
    fit = fit_populations(sideband_signal(p, OMEGA, 0.0, TAUS, "red"))
    assert np.max(np.abs(fit.populations - p)) < 1e-6


def test_fit_blue_signal_round_trip():
    p = poisson(0.8)
    fit = fit_populations(sideband_signal(p, OMEGA, 0.0, TAUS, "blue"))
    assert np.max(np.abs(fit.populations - p)) < 1e-3


def test_fit_with_decay_round_trip():
    p = poisson(1.2)
    gamma = 180.0
    fit = fit_populations(sideband_signal(p, OMEGA, gamma, TAUS, "red"))
    assert np.max(np.abs(fit.populations - p)) < 1e-3


def test_fit_result_is_simplex_point_for_arbitrary_signal():
    rng = np.random.default_rng(9)
    noise = SidebandSignal(TAUS, rng.uniform(0, 1, TAUS.size), "red", OMEGA, 0.0)
    fit = fit_populations(noise)
    assert np.all(fit.populations >= 0)
    assert fit.populations.sum() == pytest.approx(1.0, abs=1e-9)


def test_fit_noisy_round_trip_within_tolerance():
    p = poisson(1.44)
    sig = sideband_signal(p, OMEGA, 0.0, TAUS, "red")
    good = 0
    for seed in range(20):
        fit = fit_populations(sample_signal(sig, 500, seed))
        if np.max(np.abs(fit.populations - p)) < 0.02:
            good += 1
    assert good >= 18


def test_fit_floated_rates_recover_true_rates():
    p = poisson(1.1)
    true_gamma = 150.0
    sig = sideband_signal(p, OMEGA, true_gamma, TAUS, "red")
    # corrupt the metadata so the fit must find the rates itself
    off = SidebandSignal(sig.taus, sig.pe, "red", OMEGA * 1.07, 0.0)
    fit = fit_populations(off, float_rates=True)
    assert abs(fit.omega_rsb - OMEGA) / OMEGA < 1e-3
    assert abs(fit.gamma - true_gamma) < 10.0
    assert np.max(np.abs(fit.populations - p)) < 1e-3


def test_fit_warns_on_ill_conditioned_design():
    p = poisson(1.0)
    short = np.linspace(PERIOD / 100, PERIOD / 25, 4)  # far too short to resolve
    sig = sideband_signal(p, OMEGA, 0.0, short, "red")
    with pytest.warns(UserWarning, match="ill-conditioned"):
        fit = fit_populations(sig)
    assert fit.ill_conditioned


def test_sqrt_of_fitted_populations_match_scatter_coordinates():
    # characterizing a dataset member through its own sideband signal must
    # reproduce the sqrt-population coordinates used for the scatter plots
    from bosonlearn.ml import default_dataset

    for sid in ("fock2", "coh3", "sqz2"):
        member = default_dataset().by_id(sid)
        pops = member.state.padded(7).populations()[:7]
        p = pops / pops.sum()
        fit = fit_populations(sideband_signal(p, OMEGA, 0.0, TAUS, "red"))
        coords = np.sqrt(fit.populations)
        np.testing.assert_allclose(coords, np.sqrt(p), atol=1e-6)
        # which are the |amplitude| coordinates of the truncated state
        amplitudes = np.abs(member.state.padded(7).amplitudes[:7])
        np.testing.assert_allclose(coords, amplitudes / math.sqrt(pops.sum()), atol=1e-6)


def test_signal_csv_round_trip(tmp_path):
    from bosonlearn.characterize import read_signal_csv, write_signal_csv

    sig = sample_signal(sideband_signal(poisson(1.1), OMEGA, 0.0, TAUS, "red"), 400, 8)
    path = tmp_path / "sig.csv"
    write_signal_csv(sig, path)
    back = read_signal_csv(path, kind="red", omega_rsb=OMEGA)
    np.testing.assert_allclose(back.taus, sig.taus, rtol=1e-10)
    np.testing.assert_allclose(back.pe, sig.pe, rtol=1e-10)
    assert back.shots == 400
    fit_orig = fit_populations(sig)
    fit_back = fit_populations(back)
    np.testing.assert_allclose(fit_back.populations, fit_orig.populations, atol=1e-9)


# ------------------------------------------------------------------ ramsey

def test_ramsey_compensated_flat():
    taus = np.linspace(0, 4e-4, 60)
    series = ramsey_stark_scan(TRAP.stark_shift, taus, compensated=True)
    assert all(pe == pytest.approx(1.0, abs=1e-12) for _, pe in series)


def test_ramsey_uncompensated_fringe_period():
    dw = TRAP.stark_shift
    taus = np.linspace(0, 2.5 * 2 * math.pi / dw, 400)
    series = ramsey_stark_scan(dw, taus, compensated=False)
    pe = np.array([v for _, v in series])
    np.testing.assert_allclose(pe, (1 + np.cos(dw * taus)) / 2, atol=1e-12)


def test_ramsey_zero_shift_scans_identical():
    taus = np.linspace(0, 3e-4, 40)
    on = ramsey_stark_scan(0.0, taus, compensated=True)
    off = ramsey_stark_scan(0.0, taus, compensated=False)
    assert on == off
