"""Constant-depth overlap estimation between two motional states.

The circuit prepares |g> (x) |0>_A (x) sB (x) sC, applies a controlled beam
splitter CBS(pi, 0) between the ancilla mode A and mode B, then CBS(pi/2, pi)
between A and C, and projects the spin.  The squared overlap is recovered
from the ground-state probability as |1 - 2 P_g|; the circuit depth does not
depend on the state dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import MotionalState, fock_state, free_evolve
from .pulses import BeamSplitterSpec, CompositeState, TrapConfig, apply_cbs

Z95 = 1.959963984540054  # two-sided 95% normal quantile

_PG_CACHE: dict[tuple[bytes, bytes], float] = {}


@dataclass(frozen=True)
class OverlapEstimate:
    """Estimated squared overlap |<sB|sC>|^2 from the spin measurement.

    estimate = |1 - 2 p_ground|; shots == 0 marks an exact (noise-free)
    evaluation, in which case the confidence interval has zero width.
    """

    estimate: float
    p_ground: float
    shots: int
    conf_low: float
    conf_high: float
    seed: int | None = None

    def __post_init__(self):
        if not math.isclose(self.estimate, abs(1.0 - 2.0 * self.p_ground), abs_tol=1e-12):
            raise ValueError("estimate must equal |1 - 2 p_ground|")
        if not (self.conf_low <= self.estimate + 1e-12 and self.estimate <= self.conf_high + 1e-12):
            raise ValueError("confidence interval must bracket the estimate")


def ground_probability_exact(s_b: MotionalState, s_c: MotionalState, psi_s: float = 0.0) -> float:
    """P_g of the two-beam-splitter circuit, computed exactly.

    States are zero-padded to a common dimension, the ancilla starts in the
    vacuum of that dimension, and the beam splitters grow the truncation
    internally wherever total phonon number requires it.
    """
    key = (s_b.amplitudes.tobytes(), s_c.amplitudes.tobytes())
    if psi_s == 0.0 and key in _PG_CACHE:
        return _PG_CACHE[key]
    dim = max(s_b.dim, s_c.dim)
    comp = CompositeState.from_modes(fock_state(0, dim), s_b.padded(dim), s_c.padded(dim))
    comp = apply_cbs(comp, BeamSplitterSpec(math.pi, 0.0, (0, 1)), psi_s=psi_s)
    comp = comp.trim_mode(1)  # the full-transfer CBS leaves mode B in vacuum
    comp = apply_cbs(comp, BeamSplitterSpec(math.pi / 2, math.pi, (0, 2)), psi_s=psi_s)
    p_g = min(max(comp.ground_probability(), 0.0), 1.0)
    if psi_s == 0.0:
        _PG_CACHE[key] = p_g
    return p_g


def swap_test_exact(s_b: MotionalState, s_c: MotionalState) -> OverlapEstimate:
    """Noise-free overlap estimate; equals the direct inner product within 1e-9."""
    p_g = ground_probability_exact(s_b, s_c)
    est = abs(1.0 - 2.0 * p_g)
    return OverlapEstimate(est, p_g, 0, est, est)


def swap_test_sampled(
    s_b: MotionalState, s_c: MotionalState, shots: int, seed
) -> OverlapEstimate:
    """Overlap estimate from `shots` Bernoulli samples of the spin measurement.

    The 95% interval is the normal binomial approximation on P_g, mapped
    through |1 - 2 p| and clipped to [0, 1].  Deterministic for a fixed seed.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1 (use swap_test_exact for shots = 0)")
    p_g = ground_probability_exact(s_b, s_c)
    rng = np.random.default_rng(seed)
    successes = int(rng.binomial(shots, p_g))
    p_hat = successes / shots
    est = abs(1.0 - 2.0 * p_hat)
    half = Z95 * math.sqrt(p_hat * (1.0 - p_hat) / shots)
    p_lo, p_hi = max(0.0, p_hat - half), min(1.0, p_hat + half)
    ends = (abs(1.0 - 2.0 * p_lo), abs(1.0 - 2.0 * p_hi))
    lo = 0.0 if p_lo <= 0.5 <= p_hi else min(ends)
    hi = min(max(ends), 1.0)
    seed_val = seed if isinstance(seed, (int, np.integer)) else None
    return OverlapEstimate(est, p_hat, shots, lo, hi, seed_val)


def make_overlap_fn(shots: int, master_seed: int | None = None):
    """Overlap callable `fn(s1, s2, key) -> float` for the learning algorithms.

    shots == 0 gives the exact estimator (key ignored, no RNG touched).
    Otherwise each call derives its own generator from the master seed and the
    integer tuple `key`, so results do not depend on evaluation order.
    """
    if shots == 0:
        return lambda s1, s2, key=(): swap_test_exact(s1, s2).estimate

    if master_seed is None:
        raise ValueError("sampled overlaps require a master seed")

    def sampled(s1, s2, key=()):
        seq = np.random.SeedSequence([int(master_seed), *(int(k) for k in key)])
        return swap_test_sampled(s1, s2, shots, seq).estimate

    return sampled


def delay_scan(
    s_b: MotionalState,
    s_c: MotionalState,
    trap: TrapConfig,
    taus,
) -> list[tuple[float, float]]:
    """Overlap versus wait time between preparation and measurement.

    Both modes evolve freely at their own frequencies for tau seconds before
    the test, so the overlap oscillates with period 2 pi / |omega_c - omega_b|.
    """
    out = []
    for tau in np.asarray(taus, dtype=float):
        b_t = free_evolve(s_b, trap.omega_b, tau)
        c_t = free_evolve(s_c, trap.omega_c, tau)
        out.append((float(tau), swap_test_exact(b_t, c_t).estimate))
    return out


def overlap_matrix(
    rows: list[tuple[str, MotionalState]],
    cols: list[tuple[str, MotionalState]],
    shots: int = 0,
    master_seed: int | None = None,
) -> list[dict]:
    """All pairwise overlap estimates as flat records (one per row/col pair)."""
    records = []
    for i, (rid, rstate) in enumerate(rows):
        for j, (cid, cstate) in enumerate(cols):
            if shots == 0:
                est = swap_test_exact(rstate, cstate)
            else:
                if master_seed is None:
                    raise ValueError("sampled overlaps require a master seed")
                seq = np.random.SeedSequence([int(master_seed), i, j])
                est = swap_test_sampled(rstate, cstate, shots, seq)
            records.append(
                {
                    "row": rid,
                    "col": cid,
                    "estimate": est.estimate,
                    "conf_low": est.conf_low,
                    "conf_high": est.conf_high,
                    "shots": est.shots,
                }
            )
    return records
