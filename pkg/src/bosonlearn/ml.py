"""Machine learning over quantum states with overlap-based distances.

K-means clustering assigns each data state to the centroid of highest
squared overlap (equivalently smallest Hilbert-Schmidt distance) and updates
each centroid to the normalized mean of its members' amplitude vectors,
truncated to a fixed dimension.  k-NN classification labels a trial state by
the majority cluster among its k highest-overlap training neighbors.

The overlap function is injected so the same algorithms run against the
exact estimator or the shot-sampled one; see `swap.make_overlap_fn`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    MotionalState,
    StateSpec,
    coherent_state,
    combine_states,
    displaced_state,
    fock_superposition,
    squeezed_vacuum,
)

CENTROID_DIM_DEFAULT = 5

SQUEEZE_PARAMS = (1.5, 1.1, 1.2, 1.3, 1.4)
FOCK_PAIR_PARAMS = (0.37, 0.45, 0.47, 0.72, 0.55)  # superposition angle / pi
COHERENT_PARAMS = (1.5, 1.3, 1.0, 1.2, 1.1)


@dataclass(frozen=True)
class DataState:
    """One dataset member: id, generating family, spec and realized state."""

    id: str
    family: str
    spec: StateSpec
    state: MotionalState


@dataclass(frozen=True)
class Dataset:
    states: tuple[DataState, ...]

    def __post_init__(self):
        ids = [s.id for s in self.states]
        if len(set(ids)) != len(ids):
            raise ValueError("dataset ids must be unique")

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def by_id(self, sid: str) -> DataState:
        for s in self.states:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def families(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for s in self.states:
            out.setdefault(s.family, []).append(s.id)
        return out


def default_dataset() -> Dataset:
    """The 15-state, three-family dataset used by the bundled experiments.

    Five squeezed vacua (phase pi), five |0>/|1> superpositions and five
    coherent states, with family labels attached for scoring.
    """
    members = []
    for i, r in enumerate(SQUEEZE_PARAMS, start=1):
        spec = StateSpec("squeezed_vacuum", {"r": r, "phase": math.pi})
        members.append(DataState(f"sqz{i}", "squeezed", spec, spec.realize()))
    for i, phi_over_pi in enumerate(FOCK_PAIR_PARAMS, start=1):
        spec = StateSpec("fock_superposition", {"phi": phi_over_pi * math.pi})
        members.append(DataState(f"fock{i}", "fock", spec, spec.realize()))
    for i, alpha in enumerate(COHERENT_PARAMS, start=1):
        spec = StateSpec("coherent", {"alpha": alpha})
        members.append(DataState(f"coh{i}", "coherent", spec, spec.realize()))
    return Dataset(tuple(members))


def default_knn_trials() -> list[tuple[str, MotionalState]]:
    """Five trial states for the k-NN demonstration.

    One member-style state per family (squeezed, |0>/|1> superposition,
    coherent), a displaced superposition D(1)(|0> - |1>), and a
    three-component mixture of all families (renormalized).
    """
    # middle term is sqrt(0.2) (|0> + |1>) with the unnormalized pair, so the
    # normalized-state weight is sqrt(0.4); the squeezed component uses the
    # opposite squeeze-operator sign convention (even-level amplitudes
    # alternate), which is what places this trial in the Fock-pair cluster
    mixture = combine_states(
        [
            (math.sqrt(0.3), squeezed_vacuum(0.8, 0.0)),
            (math.sqrt(0.4), MotionalState.canonical([1.0, 1.0])),
            (math.sqrt(0.5), coherent_state(1.7)),
        ]
    )
    displaced = displaced_state(1.0, MotionalState.canonical([1.0, -1.0]))
    return [
        ("trial-sqz", squeezed_vacuum(1.2, math.pi)),
        ("trial-fock", fock_superposition(math.pi / 2)),
        ("trial-coh", coherent_state(1.2)),
        ("trial-displaced", displaced),
        ("trial-mixture", mixture),
    ]


@dataclass(frozen=True)
class ClusteringStep:
    """One assignment step: centroids used, overlaps measured, clusters chosen."""

    iteration: int
    centroids: tuple[MotionalState, ...]
    overlaps: np.ndarray = field(repr=False)  # shape (M, K)
    assignments: dict[str, int] = field(repr=False)  # state id -> 1-based cluster
    converged: bool = False


def _member_vector(state: MotionalState, representation: str) -> np.ndarray:
    if representation == "true":
        return state.amplitudes
    if representation == "sqrt_population":
        # what a diagonal (population-only) characterization would reconstruct
        return np.sqrt(state.populations()).astype(complex)
    raise ValueError(f"unknown member representation {representation!r}")


def _update_centroid(vectors: list[np.ndarray], centroid_dim: int, rule: str) -> MotionalState:
    dim = max(v.size for v in vectors)
    padded = np.zeros((len(vectors), dim), dtype=complex)
    for i, v in enumerate(vectors):
        padded[i, : v.size] = v
    if rule == "mean":
        mean = padded.mean(axis=0)
    elif rule == "principal_eigenvector":
        # optimal centroid for the Hilbert-Schmidt cost: top eigenvector of
        # the members' average projector
        proj = (padded.conj().T @ padded) / len(vectors)
        _, vecs = np.linalg.eigh(proj)
        mean = vecs[:, -1]
    else:
        raise ValueError(f"unknown update rule {rule!r}")
    truncated = np.zeros(centroid_dim, dtype=complex)
    take = min(centroid_dim, mean.size)
    truncated[:take] = mean[:take]
    if np.linalg.norm(truncated) == 0:
        raise ValueError("centroid update produced a zero vector")
    return MotionalState.canonical(truncated)


def kmeans(
    data: Dataset,
    k: int,
    init_centroids: list[MotionalState],
    overlap_fn,
    centroid_dim: int = CENTROID_DIM_DEFAULT,
    max_iter: int = 25,
    update_rule: str = "mean",
    member_representation: str = "true",
) -> list[ClusteringStep]:
    """Cluster the dataset and return the full per-step trajectory.

    Each step assigns every state to the centroid of largest overlap
    (ties go to the lowest cluster index), then replaces each centroid by the
    normalized mean of its members truncated to `centroid_dim`.  Empty
    clusters keep their previous centroid.  The run stops when an assignment
    repeats the previous one (converged) or after `max_iter` steps.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if len(init_centroids) != k:
        raise ValueError(f"need {k} initial centroids, got {len(init_centroids)}")

    centroids = list(init_centroids)
    trajectory: list[ClusteringStep] = []
    previous: dict[str, int] | None = None

    for it in range(max_iter):
        overlaps = np.empty((len(data), k))
        assignments: dict[str, int] = {}
        for m, member in enumerate(data):
            for kk in range(k):
                overlaps[m, kk] = overlap_fn(member.state, centroids[kk], (it, m, kk))
            assignments[member.id] = int(np.argmax(overlaps[m])) + 1

        converged = assignments == previous
        trajectory.append(
            ClusteringStep(it, tuple(centroids), overlaps, assignments, converged)
        )
        if converged:
            break
        previous = assignments

        new_centroids = []
        for kk in range(1, k + 1):
            vectors = [
                _member_vector(member.state, member_representation)
                for member in data
                if assignments[member.id] == kk
            ]
            if vectors:
                new_centroids.append(_update_centroid(vectors, centroid_dim, update_rule))
            else:
                new_centroids.append(centroids[kk - 1])
        centroids = new_centroids

    return trajectory


def final_partition(trajectory: list[ClusteringStep]) -> dict[str, int]:
    return dict(trajectory[-1].assignments)


@dataclass(frozen=True)
class KnnResult:
    """k-NN outcome: neighbor proportions per cluster and the winning label."""

    trial_id: str
    k: int
    proportions: dict[int, float]
    winner: int
    neighbors: tuple[tuple[str, int, float], ...]  # (id, cluster, overlap), top k
    ranked: tuple[tuple[str, int, float], ...] = field(repr=False)  # all, sorted

    def __post_init__(self):
        if abs(sum(self.proportions.values()) - 1.0) > 1e-9:
            raise ValueError("neighbor proportions must sum to 1")


def knn_classify(
    trial: MotionalState,
    training: list[tuple[DataState, int]],
    k: int,
    overlap_fn,
    trial_id: str = "trial",
    trial_index: int = 0,
) -> KnnResult:
    """Classify a trial state by its k highest-overlap training neighbors.

    Rank ties are broken by lower state id; a majority tie goes to the tied
    cluster whose member appears first in the ranking.
    """
    if not 1 <= k <= len(training):
        raise ValueError(f"k must be in 1..{len(training)}")
    scored = []
    for m, (member, cluster) in enumerate(training):
        est = overlap_fn(trial, member.state, (trial_index, m))
        scored.append((member.id, cluster, float(est)))
    ranked = tuple(sorted(scored, key=lambda rec: (-rec[2], rec[0])))
    top = ranked[:k]

    counts: dict[int, int] = {}
    first_rank: dict[int, int] = {}
    for rank, (_, cluster, _) in enumerate(top):
        counts[cluster] = counts.get(cluster, 0) + 1
        first_rank.setdefault(cluster, rank)
    winner = min(counts, key=lambda cl: (-counts[cl], first_rank[cl]))
    proportions = {cl: counts.get(cl, 0) / k for cl in sorted(counts)}
    return KnnResult(trial_id, k, proportions, winner, top, ranked)
