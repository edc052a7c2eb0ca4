"""Deterministic synthesis of arbitrary motional states from |g, 0>.

An n-dimensional target is prepared by n-1 (carrier, red-sideband) pulse
pairs.  The schedule is constructed backward: starting from the target,
each stage first chooses a red-sideband rotation that empties the top
occupied level |g, j> into |e, j-1>, then a carrier rotation that merges
|e, j-1> into |g, j-1>.  Inverting and reversing the recorded rotations
yields the forward schedule.  Every step is a closed-form two-level
rotation: angles come from arctangents of amplitude-magnitude ratios,
phases from amplitude arguments.

Durations are stored as base Rabi angles (Omega * t); they become seconds
only when combined with a drive strength, e.g. for the AC-Stark bookkeeping
or for reporting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import MotionalState, fock_state
from .pulses import (
    CompositeState,
    Pulse,
    TrapConfig,
    apply_carrier,
    apply_red_sideband,
    apply_stark,
)


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered pulse list realizing one target state in one mode."""

    pulses: tuple[Pulse, ...]
    target_dim: int
    mode: int = 0
    target_amplitudes: tuple[complex, ...] = field(default=(), repr=False)

    def __post_init__(self):
        n_pairs = sum(1 for p in self.pulses if p.kind == "carrier")
        n_rsb = sum(1 for p in self.pulses if p.kind == "red_sideband")
        if n_pairs != self.target_dim - 1 or n_rsb != self.target_dim - 1:
            raise ValueError(
                f"schedule for dim {self.target_dim} must hold exactly "
                f"{self.target_dim - 1} carrier/red-sideband pairs"
            )

    @property
    def n_pairs(self) -> int:
        return self.target_dim - 1

    def pairs(self) -> list[tuple[Pulse, Pulse]]:
        """(carrier, red-sideband) pairs in application order."""
        out = []
        for i in range(0, len(self.pulses), 2):
            out.append((self.pulses[i], self.pulses[i + 1]))
        return out

    def total_sideband_time(self, omega_rsb: float) -> float:
        return sum(p.angle / omega_rsb for p in self.pulses if p.kind == "red_sideband")

    def to_json(self) -> str:
        doc = {
            "target_dim": self.target_dim,
            "mode": self.mode,
            "target_amplitudes": [[a.real, a.imag] for a in self.target_amplitudes],
            "pulses": [
                {"kind": p.kind, "angle": p.angle, "phase": p.phase, "mode": p.mode}
                for p in self.pulses
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PulseSchedule":
        doc = json.loads(text)
        return cls(
            pulses=tuple(
                Pulse(d["kind"], d["angle"], d["phase"], d["mode"]) for d in doc["pulses"]
            ),
            target_dim=doc["target_dim"],
            mode=doc["mode"],
            target_amplitudes=tuple(complex(re, im) for re, im in doc["target_amplitudes"]),
        )


@dataclass(frozen=True)
class FidelityReport:
    """Forward-simulation result: spin-ground probability and target overlap."""

    ground_probability: float
    target_overlap: float


def synthesize(target: MotionalState, mode: int = 0) -> PulseSchedule:
    """Build the (carrier, red-sideband) schedule preparing `target` from |g, 0>.

    The returned schedule has exactly target.dim - 1 pairs; forward simulation
    from |g, 0> reproduces the target with squared overlap 1 up to float
    rounding.  Levels with zero amplitude produce zero-duration pulses rather
    than a shorter schedule.
    """
    n = target.dim
    if n < 1:
        raise ValueError("target dimension must be >= 1")
    state = CompositeState.from_modes(target)
    backward: list[Pulse] = []
    for j in range(n - 1, 0, -1):
        tensor = state.tensor
        u = tensor[0, j]  # |g, j>, to be emptied
        v = tensor[1, j - 1]  # |e, j-1>, its sideband partner
        angle = 2.0 * math.atan2(abs(u), abs(v))
        if abs(u) > 0:
            ups = (np.angle(u) - (np.angle(v) if abs(v) > 0 else 0.0) - math.pi / 2) % (2 * math.pi)
        else:
            angle, ups = 0.0, 0.0
        rsb = Pulse("red_sideband", angle / math.sqrt(j), ups, mode)
        state = apply_red_sideband(state, rsb.angle, rsb.phase, mode=0)
        backward.append(rsb)

        tensor = state.tensor
        w = tensor[1, j - 1]  # |e, j-1>, to be merged
        z = tensor[0, j - 1]  # |g, j-1>
        t_angle = 2.0 * math.atan2(abs(w), abs(z))
        if abs(w) > 0:
            phi = ((np.angle(z) if abs(z) > 0 else 0.0) - np.angle(w) + math.pi / 2) % (2 * math.pi)
        else:
            t_angle, phi = 0.0, 0.0
        carrier = Pulse("carrier", t_angle, phi, mode)
        state = apply_carrier(state, carrier.angle, carrier.phase)
        backward.append(carrier)

    # invert (angle unchanged, phase + pi flips the rotation sense) and reverse
    forward = tuple(
        Pulse(p.kind, p.angle, p.phase + math.pi if p.angle > 0 else 0.0, p.mode)
        for p in reversed(backward)
    )
    return PulseSchedule(
        pulses=forward,
        target_dim=n,
        mode=mode,
        target_amplitudes=tuple(complex(a) for a in target.amplitudes),
    )


def compensate_stark(sched: PulseSchedule, stark_shift: float, omega_rsb: float) -> PulseSchedule:
    """Shift carrier phases to undo the AC-Stark rotation of preceding sidebands.

    Each carrier phase gains the cumulative stark angle sum(dw * tau) over all
    red-sideband pulses applied before it (tau = base angle / omega_rsb).
    Sideband phases are untouched.
    """
    accumulated = 0.0
    pulses = []
    for p in sched.pulses:
        if p.kind == "carrier":
            pulses.append(Pulse(p.kind, p.angle, p.phase + accumulated, p.mode))
        else:
            pulses.append(p)
            if p.kind == "red_sideband":
                accumulated += stark_shift * (p.angle / omega_rsb)
    return PulseSchedule(
        pulses=tuple(pulses),
        target_dim=sched.target_dim,
        mode=sched.mode,
        target_amplitudes=sched.target_amplitudes,
    )


def simulate_schedule(
    sched: PulseSchedule,
    stark_shift: float = 0.0,
    omega_rsb: float | None = None,
) -> CompositeState:
    """Forward-simulate a schedule from |g, 0>, optionally with AC-Stark noise.

    With stark_shift nonzero, every red-sideband pulse of duration tau is
    followed by the spin phase rotation apply_stark(dw, tau).  The sideband
    beat note is derived from the (shifted) spin transition, so its drive
    phase tracks the accumulated stark angle; carrier pulses run from an
    independent oscillator and see the shift, which is what compensate_stark
    corrects.
    """
    if stark_shift and not omega_rsb:
        raise ValueError("omega_rsb is required to convert angles to durations")
    c = CompositeState.from_modes(fock_state(0, sched.target_dim))
    accumulated = 0.0
    for p in sched.pulses:
        if p.kind == "carrier":
            c = apply_carrier(c, p.angle, p.phase)
        elif p.kind == "red_sideband":
            c = apply_red_sideband(c, p.angle, p.phase + accumulated, mode=0)
            if stark_shift:
                tau = p.angle / omega_rsb
                c = apply_stark(c, stark_shift, tau)
                accumulated += stark_shift * tau
        else:
            raise ValueError(f"schedule cannot contain {p.kind!r} pulses")
    return c


def verify_schedule(
    sched: PulseSchedule,
    target: MotionalState | None = None,
    stark_shift: float = 0.0,
    omega_rsb: float | None = None,
) -> FidelityReport:
    """Forward-simulate and report spin-|g> probability and target overlap."""
    if target is None:
        target = MotionalState(np.array(sched.target_amplitudes, dtype=complex))
    final = simulate_schedule(sched, stark_shift=stark_shift, omega_rsb=omega_rsb)
    p_ground = final.ground_probability()
    dim = max(target.dim, sched.target_dim)
    branch = np.zeros(dim, dtype=complex)
    branch[: sched.target_dim] = final.spin_branch("g")
    overlap = abs(np.vdot(target.padded(dim).amplitudes, branch)) ** 2
    return FidelityReport(ground_probability=p_ground, target_overlap=float(overlap))


def schedule_durations(sched: PulseSchedule, trap: TrapConfig) -> list[float]:
    """Per-pulse durations in seconds for the given trap drive strengths."""
    return [p.duration(trap) for p in sched.pulses]
