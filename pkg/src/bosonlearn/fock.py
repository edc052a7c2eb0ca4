"""Truncated Fock-space states of a single motional mode.

States are unit-norm complex amplitude vectors over the number basis
|0>, |1>, ..., |dim-1>.  All factory functions return states in canonical
form: the first nonzero amplitude is real and nonnegative, so the analytic
state families used throughout (Fock superpositions, squeezed vacuum with
phase pi, coherent states with real alpha) come out with real nonnegative
coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
CAPTURE_TOL = 1e-6
MAX_DIM = 64


class TruncationError(ValueError):
    """Requested truncation cannot capture the state within tolerance."""


def _canonicalize(amps: np.ndarray) -> np.ndarray:
    """Normalize and rotate the global phase so the first nonzero entry is real >= 0."""
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValueError("cannot normalize a zero amplitude vector")
    amps = amps / norm
    nz = np.flatnonzero(np.abs(amps) > 1e-12)
    if nz.size:
        amps = amps * np.exp(-1j * np.angle(amps[nz[0]]))
    return amps


@dataclass(frozen=True)
class MotionalState:
    """Unit-norm amplitude vector over a truncated Fock basis of one mode."""

    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amplitudes must be a non-empty 1-D vector")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError("amplitudes must have unit norm within 1e-12")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def canonical(cls, amplitudes) -> "MotionalState":
        """Build a state from raw amplitudes: normalize and fix the global phase."""
        return cls(_canonicalize(np.asarray(amplitudes, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_phonon(self) -> float:
        return float(np.sum(np.arange(self.dim) * self.populations()))

    def padded(self, dim: int) -> "MotionalState":
        """Zero-extend to `dim` levels (no-op if already at least that large)."""
        if dim <= self.dim:
            return self
        amps = np.zeros(dim, dtype=complex)
        amps[: self.dim] = self.amplitudes
        return MotionalState(amps)


def fock_state(level: int, dim: int) -> MotionalState:
    """Number state |level> in a `dim`-level truncation."""
    if not 0 <= level < dim:
        raise ValueError(f"Fock level {level} out of range for dim {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[level] = 1.0
    return MotionalState(amps)


def amplitude_encode(x) -> MotionalState:
    """Amplitude-encode a real feature vector: entry x_j becomes the |j-1> amplitude.

    The vector is divided by its Euclidean norm; an overall sign is removed by
    the canonical-phase rule, so encode(c*x) == encode(x) for any c > 0.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("feature vector must be a non-empty 1-D real vector")
    if np.linalg.norm(x) == 0:
        raise ValueError("cannot amplitude-encode the zero vector")
    return MotionalState.canonical(x.astype(complex))


def _coherent_populations(alpha: complex):
    """Poisson populations |<j|alpha>|^2, generated term by term."""
    mean = abs(alpha) ** 2
    p = math.exp(-mean)
    j = 0
    while True:
        yield p
        j += 1
        p *= mean / j


def _squeezed_populations(r: float):
    """Populations of squeezed vacuum on even levels 2m, zero on odd ones."""
    t = math.tanh(r) ** 2
    p = 1.0 / math.cosh(r)
    m = 0
    while True:
        yield p  # level 2m
        yield 0.0  # level 2m + 1
        m += 1
        p *= t * (2 * m - 1) / (2 * m)


def _adaptive_dim(populations, dim: int | None, what: str) -> int:
    """Smallest dim whose captured population is >= 1 - CAPTURE_TOL.

    With an explicit `dim` the capture requirement is enforced strictly; in
    adaptive mode the search is capped at MAX_DIM and the best available
    truncation is accepted (heavy-tailed squeezed states hit the cap).
    """
    captured = 0.0
    if dim is not None:
        for j, p in zip(range(dim), populations):
            captured += p
        if captured < 1.0 - CAPTURE_TOL:
            raise TruncationError(
                f"dim {dim} captures only {captured:.9f} of the {what} norm"
            )
        return dim
    for j, p in zip(range(MAX_DIM), populations):
        captured += p
        if captured >= 1.0 - CAPTURE_TOL:
            return j + 1
    return MAX_DIM


def coherent_state(alpha: complex, dim: int | None = None) -> MotionalState:
    """Coherent state D(alpha)|0>, amplitudes ~ exp(-|alpha|^2/2) alpha^j / sqrt(j!).

    dim=None selects the smallest truncation capturing 1 - 1e-6 of the norm
    (capped at MAX_DIM); an explicit dim that captures less raises.
    """
    alpha = complex(alpha)
    n = _adaptive_dim(_coherent_populations(alpha), dim, "coherent state")
    amps = np.empty(n, dtype=complex)
    amps[0] = math.exp(-abs(alpha) ** 2 / 2)
    for j in range(1, n):
        amps[j] = amps[j - 1] * alpha / math.sqrt(j)
    return MotionalState.canonical(amps)


def squeezed_vacuum(r: float, phase: float = math.pi, dim: int | None = None) -> MotionalState:
    """Squeezed vacuum S(r e^{i phase})|0>.

    Amplitude at level 2m is (-e^{i phase} tanh r)^m sqrt((2m)!)/(2^m m!)
    / sqrt(cosh r); odd levels are exactly zero.  phase=pi (the default)
    gives real nonnegative amplitudes.
    """
    if r < 0:
        raise ValueError("squeezing magnitude r must be >= 0")
    if r == 0:
        return fock_state(0, dim if dim is not None else 1)
    n = _adaptive_dim(_squeezed_populations(r), dim, "squeezed vacuum")
    amps = np.zeros(n, dtype=complex)
    unit = -np.exp(1j * phase)
    if abs(unit.imag) < 1e-12:  # keep multiple-of-pi phases exactly real
        unit = unit.real
    factor = unit * math.tanh(r)
    c = 1.0 / math.sqrt(math.cosh(r))
    amps[0] = c
    m = 1
    while 2 * m < n:
        c = c * factor * math.sqrt((2 * m - 1) * (2 * m)) / (2 * m)
        amps[2 * m] = c
        m += 1
    return MotionalState.canonical(amps)


def fock_superposition(phi: float) -> MotionalState:
    """Two-level superposition cos(phi/2)|0> + sin(phi/2)|1>."""
    return MotionalState.canonical([math.cos(phi / 2), math.sin(phi / 2)])


def displaced_state(alpha: complex, base: MotionalState, dim: int | None = None) -> MotionalState:
    """Apply the displacement operator D(alpha) to `base` and re-truncate.

    The displacement is evaluated exactly (matrix exponential of
    alpha a† - conj(alpha) a) in a MAX_DIM working space, then truncated by
    the adaptive capture policy.
    """
    from scipy.linalg import expm

    work = MAX_DIM
    a = np.diag(np.sqrt(np.arange(1, work)), k=1)
    d = expm(alpha * a.T.conj() - np.conjugate(alpha) * a)
    vec = d @ base.padded(work).amplitudes
    n = _adaptive_dim(iter(np.abs(vec) ** 2), dim, "displaced state")
    return MotionalState.canonical(vec[:n])


def combine_states(terms: list[tuple[complex, MotionalState]]) -> MotionalState:
    """Normalized superposition sum_i w_i |s_i> of already-built states."""
    dim = max(s.dim for _, s in terms)
    total = np.zeros(dim, dtype=complex)
    for w, s in terms:
        total[: s.dim] += w * s.amplitudes
    return MotionalState.canonical(total)


def overlap_exact(s1: MotionalState, s2: MotionalState) -> float:
    """Squared inner product |<s1|s2>|^2, zero-padding to a common dimension."""
    dim = max(s1.dim, s2.dim)
    ip = np.vdot(s1.padded(dim).amplitudes, s2.padded(dim).amplitudes)
    return float(min(abs(ip) ** 2, 1.0))


def hs_distance(s1: MotionalState, s2: MotionalState) -> float:
    """Hilbert-Schmidt distance sqrt(2 - 2 |<s1|s2>|^2) between pure states."""
    return math.sqrt(max(2.0 - 2.0 * overlap_exact(s1, s2), 0.0))


def free_evolve(s: MotionalState, omega: float, t: float) -> MotionalState:
    """Free harmonic evolution: amplitude at level j picks up exp(-i omega j t).

    The result keeps its raw phases (it is generally not in canonical form).
    """
    phases = np.exp(-1j * omega * t * np.arange(s.dim))
    return MotionalState(s.amplitudes * phases)


def wigner_grid(s: MotionalState, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Wigner function W(x, p) of a pure state on a rectangular grid.

    Convention: hbar = 1 and x = (a + a†)/sqrt(2), so the phase-space point
    (x, p) corresponds to the coherent amplitude alpha = (x + i p)/sqrt(2)
    and the vacuum peaks at W(0, 0) = 1/pi with integral d x d p equal to 1.

    Returns an array of shape (len(x), len(p)).
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    alpha = (x[:, None] + 1j * p[None, :]) / math.sqrt(2)
    c = s.amplitudes
    n = s.dim
    rho = np.outer(c, np.conjugate(c))

    # Ladder recursion over displaced-vacuum matrix elements: row m holds
    # W_{m n} grids, built from row m-1 (adapted from the standard
    # Fock-basis Wigner recursion used by continuous-variable simulators).
    w_prev = np.empty((n,) + alpha.shape, dtype=complex)
    w_cur = np.empty_like(w_prev)
    w_prev[0] = np.exp(-2.0 * np.abs(alpha) ** 2) / math.pi
    total = np.real(rho[0, 0]) * np.real(w_prev[0])
    for k in range(1, n):
        w_prev[k] = (2.0 * alpha * w_prev[k - 1]) / math.sqrt(k)
        total = total + 2.0 * np.real(rho[0, k] * w_prev[k])
    for m in range(1, n):
        w_cur[m] = (2.0 * np.conjugate(alpha) * w_prev[m] - math.sqrt(m) * w_prev[m - 1]) / math.sqrt(m)
        total = total + np.real(rho[m, m] * w_cur[m])
        for k in range(m + 1, n):
            w_cur[k] = (2.0 * alpha * w_cur[k - 1] - math.sqrt(m) * w_prev[k - 1]) / math.sqrt(k)
            total = total + 2.0 * np.real(rho[m, k] * w_cur[k])
        w_prev, w_cur = w_cur, w_prev
    return total


@dataclass(frozen=True)
class StateSpec:
    """Declarative description of a motional state, serializable to JSON.

    Families: fock_superposition(phi), squeezed_vacuum(r, phase),
    coherent(alpha), explicit(amplitudes).  `dim` of None means the adaptive
    truncation policy.
    """

    family: str
    params: dict
    dim: int | None = None

    _FAMILIES = ("fock_superposition", "squeezed_vacuum", "coherent", "explicit")

    def __post_init__(self):
        if self.family not in self._FAMILIES:
            raise ValueError(f"unknown state family {self.family!r}")
        if self.family == "squeezed_vacuum" and self.params.get("r", 0.0) < 0:
            raise ValueError("squeezing magnitude r must be >= 0")

    def realize(self) -> MotionalState:
        p = self.params
        if self.family == "fock_superposition":
            return fock_superposition(float(p["phi"]))
        if self.family == "squeezed_vacuum":
            return squeezed_vacuum(float(p["r"]), float(p.get("phase", math.pi)), self.dim)
        if self.family == "coherent":
            return coherent_state(_parse_complex(p["alpha"]), self.dim)
        amps = [_parse_complex(a) for a in p["amplitudes"]]
        return MotionalState.canonical(amps)

    def to_dict(self) -> dict:
        out = {"family": self.family, **_jsonable_params(self.params)}
        if self.dim is not None:
            out["dim"] = self.dim
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        family = d.pop("family")
        dim = d.pop("dim", None)
        return cls(family=family, params=d, dim=dim)


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _jsonable_params(params: dict) -> dict:
    out = {}
    for key, value in params.items():
        if isinstance(value, complex):
            out[key] = value.real if value.imag == 0 else [value.real, value.imag]
        elif isinstance(value, (list, tuple)):
            out[key] = [
                [v.real, v.imag] if isinstance(v, complex) else v for v in value
            ]
        else:
            out[key] = value
    return out
