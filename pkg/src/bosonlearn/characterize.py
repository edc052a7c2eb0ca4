"""Phonon-population measurement model: sideband Rabi signals and their inversion.

Driving the red (blue) sideband of an ion whose mode holds populations p(j)
produces the excitation signal

    P_e(tau) = sum_j p(j) exp(-sqrt(j') gamma tau) (1 - cos(sqrt(j') W tau)) / 2

with j' = j for the red sideband (the j = 0 term vanishes) and j' = j + 1 for
the blue one.  `fit_populations` inverts a measured signal back to p(j) by
non-negative least squares constrained to the probability simplex.

Also includes the Ramsey-with-inserted-sideband scan used to calibrate the
AC-Stark shift of the sideband drive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, nnls

from .fock import fock_state
from .pulses import (
    CompositeState,
    TrapConfig,
    apply_carrier,
    apply_red_sideband,
    apply_stark,
)

SIMPLEX_TOL = 1e-9
SUM_WEIGHT = 1e3  # weight of the sum-to-one row in the augmented NNLS system
COND_LIMIT = 1e8


def validate_distribution(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("population distribution must be a non-empty 1-D vector")
    if np.any(p < -SIMPLEX_TOL):
        raise ValueError("populations must be nonnegative")
    if abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("populations must sum to 1 within 1e-9")
    return np.clip(p, 0.0, None)


@dataclass(frozen=True)
class SidebandSignal:
    """Excitation probability versus pulse duration for one sideband drive."""

    taus: np.ndarray = field(repr=False)
    pe: np.ndarray = field(repr=False)
    kind: str = "red"
    omega_rsb: float = TrapConfig().omega_rsb
    gamma: float = 0.0
    shots: int | None = None  # per-point shot count, None for noise-free

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        pe = np.asarray(self.pe, dtype=float)
        if self.kind not in ("red", "blue"):
            raise ValueError("kind must be 'red' or 'blue'")
        if taus.ndim != 1 or taus.shape != pe.shape:
            raise ValueError("taus and pe must be matching 1-D arrays")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("taus must be strictly increasing")
        if np.any((pe < -1e-12) | (pe > 1 + 1e-12)):
            raise ValueError("P_e values must lie in [0, 1]")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "pe", np.clip(pe, 0.0, 1.0))


def _design_matrix(taus, omega_rsb, gamma, j_max, kind) -> np.ndarray:
    """Columns j = 0..j_max of the per-level signal contributions."""
    taus = np.asarray(taus, dtype=float)
    cols = []
    for j in range(j_max + 1):
        j_eff = j if kind == "red" else j + 1
        if j_eff == 0:
            cols.append(np.zeros_like(taus))
            continue
        root = np.sqrt(j_eff)
        cols.append(np.exp(-root * gamma * taus) * (1.0 - np.cos(root * omega_rsb * taus)) / 2.0)
    return np.column_stack(cols)


def sideband_signal(
    populations,
    omega_rsb: float,
    gamma: float,
    taus,
    kind: str = "red",
) -> SidebandSignal:
    """Noise-free sideband Rabi signal of a given phonon distribution."""
    p = validate_distribution(populations)
    design = _design_matrix(taus, omega_rsb, gamma, p.size - 1, kind)
    return SidebandSignal(np.asarray(taus, float), design @ p, kind, omega_rsb, gamma)


def sample_signal(signal: SidebandSignal, shots: int, seed) -> SidebandSignal:
    """Replace each point with a binomial estimate from `shots` detections."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    noisy = rng.binomial(shots, signal.pe) / shots
    return SidebandSignal(
        signal.taus, noisy, signal.kind, signal.omega_rsb, signal.gamma, shots
    )


@dataclass(frozen=True)
class PopulationFit:
    """Result of the simplex-constrained population fit."""

    populations: np.ndarray = field(repr=False)
    residual_norm: float
    omega_rsb: float
    gamma: float
    condition: float
    ill_conditioned: bool


def _solve_simplex_lsq(design: np.ndarray, pe: np.ndarray) -> tuple[np.ndarray, float]:
    """min ||design p - pe|| over p >= 0, sum p = 1 (sum enforced by penalty row)."""
    n = design.shape[1]
    aug = np.vstack([design, SUM_WEIGHT * np.ones((1, n))])
    target = np.concatenate([pe, [SUM_WEIGHT]])
    p, _ = nnls(aug, target)
    total = p.sum()
    if total <= 0:
        raise ValueError("population fit collapsed to the zero vector")
    p = p / total
    residual = float(np.linalg.norm(design @ p - pe))
    return p, residual


def fit_populations(
    signal: SidebandSignal,
    j_max: int = 6,
    omega_rsb: float | None = None,
    gamma: float | None = None,
    float_rates: bool = False,
) -> PopulationFit:
    """Recover p(0..j_max) from a sideband signal.

    Rates default to the values carried by the signal; with float_rates=True
    they are refined by a simplex search around a Fourier-peak initial guess,
    with the constrained linear fit re-solved at every trial point.
    An ill-conditioned design (identifiability loss) is flagged and warned
    about rather than silently accepted.
    """
    omega = signal.omega_rsb if omega_rsb is None else omega_rsb
    gam = signal.gamma if gamma is None else gamma

    if float_rates:
        omega0 = _fourier_peak_rate(signal) or omega
        x0 = np.array([omega0, max(gam, 0.0)])

        def objective(x):
            if x[0] <= 0 or x[1] < 0:
                return 1e6
            design = _design_matrix(signal.taus, x[0], x[1], j_max, signal.kind)
            try:
                _, res = _solve_simplex_lsq(design, signal.pe)
            except ValueError:
                return 1e6
            return res

        result = minimize(objective, x0, method="Nelder-Mead", options={"xatol": 1e-3, "fatol": 1e-12})
        omega, gam = float(result.x[0]), float(abs(result.x[1]))

    design = _design_matrix(signal.taus, omega, gam, j_max, signal.kind)
    p, residual = _solve_simplex_lsq(design, signal.pe)

    active = [j for j in range(j_max + 1) if np.any(design[:, j] != 0.0)]
    condition = float(np.linalg.cond(design[:, active])) if active else np.inf
    ill = not np.isfinite(condition) or condition > COND_LIMIT
    if ill:
        warnings.warn(
            f"sideband fit design is ill-conditioned (cond={condition:.3g}); "
            "populations may not be identifiable",
            stacklevel=2,
        )
    return PopulationFit(p, residual, omega, gam, condition, ill)


def _fourier_peak_rate(signal: SidebandSignal) -> float | None:
    """Angular frequency of the strongest Fourier component of the signal."""
    pe = signal.pe - signal.pe.mean()
    if not np.any(pe):
        return None
    dt = signal.taus[1] - signal.taus[0]
    spectrum = np.abs(np.fft.rfft(pe))
    freqs = np.fft.rfftfreq(pe.size, dt)
    peak = int(np.argmax(spectrum[1:])) + 1
    omega = 2.0 * np.pi * freqs[peak]
    # the signal oscillates at sqrt(j') * omega_rsb; the strongest line is
    # usually the lowest occupied level, so this is only a starting point
    if signal.kind == "blue":
        return omega
    return omega


def write_signal_csv(signal: SidebandSignal, path) -> None:
    """Write a signal as (tau_us, pe, shots) rows; shots 0 marks noise-free."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau_us", "pe", "shots"])
        for tau, pe in zip(signal.taus, signal.pe):
            writer.writerow([format(tau * 1e6, ".12g"), format(pe, ".12g"), signal.shots or 0])


def read_signal_csv(path, kind: str = "red", omega_rsb: float | None = None, gamma: float = 0.0) -> SidebandSignal:
    """Read a (tau_us, pe, shots) file back into a SidebandSignal."""
    import csv

    taus, pe, shots = [], [], 0
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            taus.append(float(row["tau_us"]) * 1e-6)
            pe.append(float(row["pe"]))
            shots = int(row["shots"])
    omega = TrapConfig().omega_rsb if omega_rsb is None else omega_rsb
    return SidebandSignal(np.array(taus), np.array(pe), kind, omega, gamma, shots or None)


def ramsey_stark_scan(
    stark_shift: float,
    taus,
    compensated: bool,
    omega_rsb: float | None = None,
) -> list[tuple[float, float]]:
    """Ramsey fringe with a red-sideband pulse of duration tau inserted.

    The motional mode is in its ground state, so the sideband drive is dark
    and only the AC-Stark phase acts on the spin.  The second pi/2 pulse
    carries phase 0 (compensated=False) or the accumulated stark angle
    dw * tau (compensated=True), which freezes the fringe at P_e = 1.
    """
    omega = TrapConfig().omega_rsb if omega_rsb is None else omega_rsb
    out = []
    for tau in np.asarray(taus, dtype=float):
        c = CompositeState.from_modes(fock_state(0, 1))
        c = apply_carrier(c, np.pi / 2, 0.0)
        c = apply_red_sideband(c, omega * tau, 0.0, mode=0)
        c = apply_stark(c, stark_shift, tau)
        phase = stark_shift * tau if compensated else 0.0
        c = apply_carrier(c, np.pi / 2, phase)
        out.append((float(tau), 1.0 - c.ground_probability()))
    return out
