"""Unitary pulse primitives on spin (x) motional-mode composites.

The composite is a complex amplitude tensor over {g, e} (x) mode_1 (x) ...
(x) mode_k with truncated Fock factors.  Pulses are the laser-driven
interactions of a trapped-ion experiment: carrier rotations, red/blue
sideband (Jaynes-Cummings / anti-Jaynes-Cummings) couplings, the
spin-controlled beam splitter between two modes, and the AC-Stark phase
accumulated by the spin during sideband drive.

Rotation conventions (fixed once, used consistently everywhere):

  carrier(theta, phi):   |g,n> -> cos(theta/2)|g,n> - i e^{-i phi} sin(theta/2)|e,n>
  red sideband:          couples |g,n> <-> |e,n-1> with Rabi angle sqrt(n)*theta,
                         phase Upsilon on the mode-raising part |e,n-1> -> |g,n>
  blue sideband:         couples |g,n> <-> |e,n+1> with sqrt(n+1) scaling
  beam splitter:         exp(-i (theta/2) sigma_x (a†b e^{-i psi} + a b† e^{i psi}))
  stark(dw, tau):        |e> branch gains relative phase e^{-i dw tau}
                         (equal to e^{-i (dw tau / 2) sigma_z} up to a global
                         phase; documented here because the compensation
                         formula in the synthesis layer depends on it)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fock import NORM_TOL, MotionalState, TruncationError

TWO_PI = 2.0 * math.pi

LEAK_TOL = 1e-9  # max population allowed at a truncation wall
OCCUPIED_TOL = 1e-30  # population below this counts as unoccupied


@dataclass(frozen=True)
class TrapConfig:
    """Mode frequencies and coupling rates of the three-mode ion trap.

    All frequencies are angular (rad/s).  Defaults are the nominal operating
    point: mode frequencies 2pi x (0.782, 1.159, 1.274) MHz, beam-splitter
    coupling 2pi x 680 Hz, AC-Stark shift 2pi x 5.9 kHz.  The carrier and
    red-sideband Rabi frequencies are representative values used to convert
    pulse angles into durations.
    """

    omega_a: float = TWO_PI * 0.782e6
    omega_b: float = TWO_PI * 1.159e6
    omega_c: float = TWO_PI * 1.274e6
    coupling_g: float = TWO_PI * 680.0
    omega_carrier: float = TWO_PI * 50e3
    omega_rsb: float = TWO_PI * 20e3
    stark_shift: float = TWO_PI * 5.9e3

    def __post_init__(self):
        freqs = (self.omega_a, self.omega_b, self.omega_c)
        if any(f < 0 for f in freqs + (self.coupling_g, self.omega_carrier, self.omega_rsb)):
            raise ValueError("frequencies must be nonnegative")
        if len({round(f, 6) for f in freqs}) != 3:
            raise ValueError("mode frequencies must be pairwise distinct")

    @property
    def beat_ab(self) -> float:
        return abs(self.omega_a - self.omega_b)

    @property
    def beat_ac(self) -> float:
        return abs(self.omega_a - self.omega_c)

    @classmethod
    def from_hz(cls, **kwargs_hz) -> "TrapConfig":
        """Build from plain-Hz values (each argument is multiplied by 2 pi)."""
        return cls(**{k: TWO_PI * v for k, v in kwargs_hz.items()})


@dataclass(frozen=True)
class Pulse:
    """One laser pulse: kind, base Rabi angle (Omega*t, radians), phase, target mode.

    The angle is the unscaled Rabi area; sideband pulses act on the
    |g,n> <-> |e,n-/+1> pair with the sqrt(n)-scaled angle.  Phases are
    reduced to [0, 2pi).
    """

    kind: str
    angle: float
    phase: float
    mode: int = 0

    def __post_init__(self):
        if self.kind not in ("carrier", "red_sideband", "blue_sideband"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.angle < 0:
            raise ValueError("pulse angle must be >= 0")
        object.__setattr__(self, "phase", self.phase % TWO_PI)

    def duration(self, trap: TrapConfig) -> float:
        """Pulse duration in seconds for the given drive strengths."""
        rate = trap.omega_carrier if self.kind == "carrier" else trap.omega_rsb
        return self.angle / rate


@dataclass(frozen=True)
class CompositeState:
    """Amplitude tensor over spin {g, e} (x) up to three motional modes."""

    tensor: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=complex)
        if t.ndim < 2 or t.ndim > 4 or t.shape[0] != 2:
            raise ValueError("tensor must have shape (2, d1[, d2[, d3]])")
        if abs(np.linalg.norm(t) - 1.0) > NORM_TOL:
            raise ValueError("composite state must have unit norm within 1e-12")
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "tensor", t)

    @classmethod
    def from_modes(cls, *modes: MotionalState, spin: str = "g") -> "CompositeState":
        """Product state |spin> (x) modes[0] (x) ... with spin 'g' or 'e'."""
        vec = np.zeros(2, dtype=complex)
        vec[{"g": 0, "e": 1}[spin]] = 1.0
        t = vec
        for m in modes:
            t = np.tensordot(t, m.amplitudes, axes=0)
        return cls(t)

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return self.tensor.shape[1:]

    @property
    def n_modes(self) -> int:
        return self.tensor.ndim - 1

    def ground_probability(self) -> float:
        return float(np.sum(np.abs(self.tensor[0]) ** 2))

    def spin_branch(self, spin: str = "g") -> np.ndarray:
        """Un-normalized mode amplitude tensor of the |g> or |e> branch."""
        return self.tensor[{"g": 0, "e": 1}[spin]]

    def mode_populations(self, mode: int) -> np.ndarray:
        """Marginal Fock populations of one mode."""
        axes = tuple(i for i in range(self.tensor.ndim) if i != mode + 1)
        return np.sum(np.abs(self.tensor) ** 2, axis=axes)

    def total_phonon_expectation(self) -> float:
        return float(
            sum(np.dot(np.arange(d), self.mode_populations(i)) for i, d in enumerate(self.mode_dims))
        )

    def pad_mode(self, mode: int, dim: int) -> "CompositeState":
        """Zero-extend one mode's truncation to `dim` levels."""
        old = self.mode_dims[mode]
        if dim <= old:
            return self
        shape = list(self.tensor.shape)
        shape[mode + 1] = dim
        t = np.zeros(shape, dtype=complex)
        t[tuple(slice(0, s) for s in self.tensor.shape)] = self.tensor
        return CompositeState(t)

    def trim_mode(self, mode: int, keep_tol: float = 1e-26) -> "CompositeState":
        """Drop unoccupied top levels of one mode (keeps at least one level)."""
        pops = self.mode_populations(mode)
        occupied = np.flatnonzero(pops > keep_tol)
        top = int(occupied[-1]) if occupied.size else 0
        if top + 1 == self.mode_dims[mode]:
            return self
        sl = [slice(None)] * self.tensor.ndim
        sl[mode + 1] = slice(0, top + 1)
        t = self.tensor[tuple(sl)].copy()
        t /= np.linalg.norm(t)
        return CompositeState(t)


def _mode_axis_last(tensor: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(tensor, mode + 1, -1)


def apply_carrier(c: CompositeState, angle: float, phase: float = 0.0) -> CompositeState:
    """Spin rotation within every Fock level (phonon number unchanged)."""
    half = angle / 2.0
    cos_t, sin_t = math.cos(half), math.sin(half)
    g, e = c.tensor[0], c.tensor[1]
    out = np.empty_like(c.tensor)
    out[0] = cos_t * g - 1j * np.exp(1j * phase) * sin_t * e
    out[1] = cos_t * e - 1j * np.exp(-1j * phase) * sin_t * g
    return CompositeState(out)


def _sideband(c, angle, phase, mode, blue):
    t = _mode_axis_last(c.tensor.copy(), mode)
    d = t.shape[-1]
    g, e = t[0], t[1]
    if blue:
        # pairs (|g,n>, |e,n+1>), n = 0..d-2, scaled angle sqrt(n+1)*angle;
        # |g,d-1> would couple out of the truncation: hard wall, must be empty
        wall = float(np.sum(np.abs(g[..., d - 1]) ** 2))
        if wall >= LEAK_TOL and not math.isclose(math.cos(math.sqrt(d) * angle / 2), 1.0, abs_tol=1e-12):
            raise TruncationError(
                f"blue sideband would leak population {wall:.3e} past the top Fock level"
            )
        scale = np.sqrt(np.arange(1, d))
        g_lo, e_hi = g[..., : d - 1], e[..., 1:]
    else:
        # pairs (|g,n>, |e,n-1>), n = 1..d-1, scaled angle sqrt(n)*angle;
        # |e,d-1> has no partner inside the truncation and is left unchanged
        scale = np.sqrt(np.arange(1, d))
        g_lo, e_hi = g[..., 1:], e[..., : d - 1]
    cos_t = np.cos(scale * angle / 2.0)
    sin_t = np.sin(scale * angle / 2.0)
    new_g = cos_t * g_lo - 1j * np.exp(1j * phase) * sin_t * e_hi
    new_e = cos_t * e_hi - 1j * np.exp(-1j * phase) * sin_t * g_lo
    if blue:
        t[0, ..., : d - 1] = new_g
        t[1, ..., 1:] = new_e
    else:
        t[0, ..., 1:] = new_g
        t[1, ..., : d - 1] = new_e
    return CompositeState(np.moveaxis(t, -1, mode + 1))


def apply_red_sideband(c: CompositeState, angle: float, phase: float = 0.0, mode: int = 0) -> CompositeState:
    """Jaynes-Cummings rotation |g,n> <-> |e,n-1> with sqrt(n)-scaled angle.

    |g,0> is dark for any angle and phase.
    """
    return _sideband(c, angle, phase, mode, blue=False)


def apply_blue_sideband(c: CompositeState, angle: float, phase: float = 0.0, mode: int = 0) -> CompositeState:
    """Anti-Jaynes-Cummings rotation |g,n> <-> |e,n+1> with sqrt(n+1) scaling.

    The top truncation level is a hard wall: if |g, dim-1> is occupied above
    1e-9 and the pulse would move it, a TruncationError is raised.
    """
    return _sideband(c, angle, phase, mode, blue=True)


def apply_stark(c: CompositeState, stark_shift: float, tau: float) -> CompositeState:
    """AC-Stark spin phase: the |e> branch gains relative phase e^{-i dw tau}."""
    t = c.tensor.copy()
    t[1] *= np.exp(-1j * stark_shift * tau)
    return CompositeState(t)


@lru_cache(maxsize=None)
def _bs_block(n_total: int, theta: float, psi: float, sign: int) -> np.ndarray:
    """Beam-splitter rotation on the total-phonon-N subspace, one sigma_x branch.

    Basis is n_a = 0..N (with n_b = N - n_a); the generator is the tridiagonal
    Hermitian matrix of a†b e^{-i psi} + a b† e^{i psi} and the returned
    unitary is exp(-i sign (theta/2) G).
    """
    n = n_total + 1
    na = np.arange(n_total)
    coupling = np.sqrt((na + 1.0) * (n_total - na))
    gen = np.zeros((n, n), dtype=complex)
    gen[np.arange(1, n), np.arange(n_total)] = np.exp(-1j * psi) * coupling
    gen[np.arange(n_total), np.arange(1, n)] = np.exp(1j * psi) * coupling
    evals, evecs = np.linalg.eigh(gen)
    u = (evecs * np.exp(-1j * sign * (theta / 2.0) * evals)) @ evecs.conj().T
    u.flags.writeable = False
    return u


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Controlled-beam-splitter parameters: mixing angle, phase, mode pair."""

    theta: float
    psi: float = 0.0
    modes: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("mixing angle theta must be >= 0")
        if len(self.modes) != 2 or self.modes[0] == self.modes[1]:
            raise ValueError("beam splitter needs two distinct modes")


def apply_cbs(c: CompositeState, spec: BeamSplitterSpec, psi_s: float = 0.0) -> CompositeState:
    """Spin-controlled beam splitter exp(-i (theta/2) sigma_x (a†b e^{-i psi} + h.c.)).

    The action is block-diagonal in the total phonon number N of the two
    target modes; on the sigma_x = +1 (-1) eigenspace each N block rotates by
    -theta/2 (+theta/2).  Modes are zero-padded automatically so every
    occupied N block fits inside the truncation, which keeps the total
    phonon-number distribution exactly conserved.  `psi_s` rotates the
    spin basis used as the control axis.
    """
    mi, mj = spec.modes
    if max(mi, mj) >= c.n_modes:
        raise ValueError(f"composite has {c.n_modes} modes, cannot couple pair {spec.modes}")

    # largest occupied total phonon number across the target pair
    pop = np.abs(c.tensor) ** 2
    axes = tuple(i for i in range(c.tensor.ndim) if i not in (mi + 1, mj + 1))
    pair_pop = np.sum(pop, axis=axes)  # shape (di, dj)
    occ = np.argwhere(pair_pop > OCCUPIED_TOL)
    n_max = int(occ.sum(axis=1).max()) if occ.size else 0
    c = c.pad_mode(mi, n_max + 1).pad_mode(mj, n_max + 1)

    order = [0] + [k + 1 for k in range(c.n_modes) if k not in (mi, mj)] + [mi + 1, mj + 1]
    t = np.transpose(c.tensor, order).copy()
    di, dj = t.shape[-2], t.shape[-1]
    lead = t.shape[:-2]
    t = t.reshape(2, -1, di, dj)

    # spin eigenstates of sigma_x(psi_s): |+-> = (|g> +- e^{-i psi_s}|e>)/sqrt(2)
    phase_s = np.exp(1j * psi_s)
    plus = (t[0] + phase_s * t[1]) / math.sqrt(2)
    minus = (t[0] - phase_s * t[1]) / math.sqrt(2)

    for branch, sign in ((plus, +1), (minus, -1)):
        for n_tot in range(n_max + 1):
            na = np.arange(n_tot + 1)  # padding guarantees the full block fits
            nb = n_tot - na
            block = branch[:, na, nb]  # (rest, N+1)
            u = _bs_block(n_tot, spec.theta, spec.psi, sign)
            branch[:, na, nb] = block @ u.T

    t_out = np.empty_like(t)
    t_out[0] = (plus + minus) / math.sqrt(2)
    t_out[1] = np.conjugate(phase_s) * (plus - minus) / math.sqrt(2)
    t_out = t_out.reshape((2,) + lead[1:] + (di, dj))
    inv = np.argsort(order)
    return CompositeState(np.transpose(t_out, inv))
