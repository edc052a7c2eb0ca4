"""Batch experiment runner: configs in, result files out.

Each experiment kind maps onto one library workflow and writes a set of
machine-readable payloads (CSV / JSON, schemas documented in the README),
a rendered PNG figure per panel, and a run manifest.  Identical configs and
seeds produce byte-identical payloads; wall-clock information lives only in
the manifest.
"""

from __future__ import annotations

import csv
import datetime
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .characterize import fit_populations, ramsey_stark_scan, sample_signal, sideband_signal
from .fock import MotionalState, StateSpec, fock_state, wigner_grid
from .ml import (
    DataState,
    Dataset,
    default_dataset,
    default_knn_trials,
    final_partition,
    kmeans,
    knn_classify,
)
from .pulses import TrapConfig
from .swap import delay_scan, make_overlap_fn, overlap_matrix
from .synthesis import compensate_stark, synthesize, verify_schedule

OUTPUT_DIR_ENV = "BOSONLEARN_OUTPUT_DIR"

KINDS = (
    "kmeans",
    "knn",
    "swap_matrix",
    "delay_scan",
    "synthesize",
    "characterize",
    "ramsey_stark",
)

TRAP_FIELDS_HZ = {
    "omega_a_hz": "omega_a",
    "omega_b_hz": "omega_b",
    "omega_c_hz": "omega_c",
    "coupling_g_hz": "coupling_g",
    "omega_carrier_hz": "omega_carrier",
    "omega_rsb_hz": "omega_rsb",
    "stark_shift_hz": "stark_shift",
}


class ConfigError(ValueError):
    """Configuration fails validation (missing or inconsistent fields)."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    shots: int
    seed: int | None
    trap: TrapConfig
    figures: bool
    output_dir: Path
    options: dict

    @classmethod
    def from_dict(cls, raw: dict, output_dir: str | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        kind = raw.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"config field 'kind' must be one of {KINDS}, got {kind!r}")
        shots = raw.get("shots", 0)
        if not isinstance(shots, int) or shots < 0:
            raise ConfigError("config field 'shots' must be a nonnegative integer")
        seed = raw.get("seed")
        if shots > 0 and seed is None:
            raise ConfigError("config field 'seed' is required whenever shots > 0")
        if seed is not None and not isinstance(seed, int):
            raise ConfigError("config field 'seed' must be an integer")

        trap_raw = raw.get("trap", {})
        unknown = set(trap_raw) - set(TRAP_FIELDS_HZ)
        if unknown:
            raise ConfigError(f"unknown trap fields: {sorted(unknown)}")
        trap_kwargs = {TRAP_FIELDS_HZ[k]: 2.0 * math.pi * float(v) for k, v in trap_raw.items()}
        try:
            trap = TrapConfig(**{**TrapConfig().__dict__, **trap_kwargs})
        except ValueError as exc:
            raise ConfigError(f"invalid trap configuration: {exc}") from exc

        out = raw.get("output_dir") or output_dir or os.environ.get(OUTPUT_DIR_ENV) or "."
        options = {
            k: v
            for k, v in raw.items()
            if k not in ("kind", "shots", "seed", "trap", "output_dir", "figures")
        }
        config = cls(
            kind=kind,
            shots=shots,
            seed=seed,
            trap=trap,
            figures=bool(raw.get("figures", True)),
            output_dir=Path(out),
            options=options,
        )
        _validate_options(config)
        return config


def _validate_options(config: ExperimentConfig) -> None:
    opts = config.options
    require = {
        "swap_matrix": ("rows", "cols"),
        "synthesize": ("target",),
    }
    for field_name in require.get(config.kind, ()):
        if field_name not in opts:
            raise ConfigError(f"{config.kind} config requires field {field_name!r}")
    for spec_field in ("target", "state", "state_b", "state_c", "alternate"):
        if spec_field in opts:
            _parse_spec(opts[spec_field], spec_field)
    for list_field in ("rows", "cols", "trials", "dataset", "init_centroids"):
        value = opts.get(list_field)
        if isinstance(value, list):
            for rec in value:
                if isinstance(rec, dict) and "spec" in rec:
                    if "id" not in rec:
                        raise ConfigError(f"every {list_field} record needs an 'id'")
                    _parse_spec(rec["spec"], list_field)
                else:
                    _parse_spec(rec, list_field)
    if config.kind == "kmeans":
        if opts.get("k", 3) < 1:
            raise ConfigError("kmeans requires k >= 1")
    if config.kind == "knn":
        if opts.get("k", 7) < 1:
            raise ConfigError("knn requires k >= 1")
    if config.kind == "characterize" and "populations" in opts:
        p = opts["populations"]
        if not isinstance(p, list) or not p or abs(sum(p) - 1.0) > 1e-9 or min(p) < 0:
            raise ConfigError("characterize field 'populations' must be a probability vector")


def _parse_spec(raw, field_name: str) -> StateSpec:
    try:
        return StateSpec.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid state spec in field {field_name!r}: {exc}") from exc


def load_config(path: str | Path, output_dir: str | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise exc  # distinguished by the CLI: parse errors exit 2
    return ExperimentConfig.from_dict(raw, output_dir=output_dir)


# ---------------------------------------------------------------------------
# deterministic serialization helpers

def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _amplitudes_json(state: MotionalState) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in state.amplitudes]


def _scatter_coords(state: MotionalState, n: int = 5) -> list[float]:
    pops = state.padded(max(n, state.dim)).populations()[:n]
    return [float(math.sqrt(p)) for p in pops]


def _write_manifest(config: ExperimentConfig, raw_echo: dict, outputs: list[str]) -> None:
    manifest = {
        "kind": config.kind,
        "seed": config.seed,
        "shots": config.shots,
        "config": raw_echo,
        "outputs": sorted(outputs),
        "versions": {
            "bosonlearn": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    write_json(config.output_dir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# experiment runners

def run_experiment(config: ExperimentConfig, raw_echo: dict | None = None) -> dict:
    """Execute one experiment; returns {'outputs': [paths...], ...} summary."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    runner = {
        "kmeans": _run_kmeans,
        "knn": _run_knn,
        "swap_matrix": _run_swap_matrix,
        "delay_scan": _run_delay_scan,
        "synthesize": _run_synthesize,
        "characterize": _run_characterize,
        "ramsey_stark": _run_ramsey_stark,
    }[config.kind]
    summary = runner(config)
    _write_manifest(config, raw_echo or {}, summary["outputs"])
    summary["outputs"].append(str(config.output_dir / "manifest.json"))
    return summary


def _load_dataset(opts: dict) -> Dataset:
    raw = opts.get("dataset", "default")
    if raw == "default":
        return default_dataset()
    members = []
    for rec in raw:
        spec = _parse_spec(rec["spec"], "dataset")
        members.append(DataState(rec["id"], rec.get("family", ""), spec, spec.realize()))
    return Dataset(tuple(members))


def _init_centroids(opts: dict) -> list[MotionalState]:
    raw = opts.get("init_centroids")
    if raw is None:
        return [fock_state(j, 3) for j in range(3)]
    return [_parse_spec(r, "init_centroids").realize() for r in raw]


def _run_kmeans(config: ExperimentConfig) -> dict:
    opts = config.options
    data = _load_dataset(opts)
    k = opts.get("k", 3)
    init = _init_centroids(opts)
    if len(init) != k:
        raise ConfigError(f"kmeans needs {k} init centroids, got {len(init)}")
    overlap_fn = make_overlap_fn(config.shots, config.seed)
    trajectory = kmeans(
        data,
        k,
        init,
        overlap_fn,
        centroid_dim=opts.get("centroid_dim", 5),
        max_iter=opts.get("max_iter", 25),
        update_rule=opts.get("update_rule", "mean"),
        member_representation=opts.get("member_representation", "true"),
    )
    out = config.output_dir
    steps_payload = [
        {
            "iteration": step.iteration,
            "converged": step.converged,
            "centroids": [_amplitudes_json(c) for c in step.centroids],
            "assignments": step.assignments,
            "overlaps": [[float(v) for v in row] for row in step.overlaps],
        }
        for step in trajectory
    ]
    write_json(out / "kmeans_steps.json", steps_payload)

    partition = final_partition(trajectory)
    write_csv(
        out / "kmeans_scatter.csv",
        ["id", "family", "cluster", "x1", "x2", "x3", "x4", "x5"],
        [[s.id, s.family, partition[s.id], *_scatter_coords(s.state)] for s in data],
    )
    write_csv(
        out / "kmeans_centroids.csv",
        ["step", "cluster", "x1", "x2", "x3", "x4", "x5"],
        [
            [step.iteration, kk + 1, *_scatter_coords(c)]
            for step in trajectory
            for kk, c in enumerate(step.centroids)
        ],
    )
    overlap_rows = []
    for step in trajectory:
        for m, s in enumerate(data):
            overlap_rows.append(
                [step.iteration, s.id, *step.overlaps[m].tolist(), step.assignments[s.id]]
            )
    write_csv(
        out / "kmeans_overlaps.csv",
        ["step", "id"] + [f"overlap_c{kk + 1}" for kk in range(k)] + ["assigned"],
        overlap_rows,
    )
    outputs = [
        str(out / n)
        for n in ("kmeans_steps.json", "kmeans_scatter.csv", "kmeans_centroids.csv", "kmeans_overlaps.csv")
    ]
    if config.figures:
        from . import plots

        outputs += plots.render_kmeans(trajectory, data, partition, out)
    return {"outputs": outputs, "partition": partition, "steps": len(trajectory)}


def _knn_training(config: ExperimentConfig, data: Dataset) -> list[tuple[DataState, int]]:
    labels = config.options.get("training_labels")
    if labels is not None:
        return [(s, int(labels[s.id])) for s in data]
    # labels discovered by an exact-overlap clustering run (deterministic)
    trajectory = kmeans(data, 3, _init_centroids({}), make_overlap_fn(0), centroid_dim=5)
    partition = final_partition(trajectory)
    return [(s, partition[s.id]) for s in data]


def _run_knn(config: ExperimentConfig) -> dict:
    opts = config.options
    data = _load_dataset(opts)
    training = _knn_training(config, data)
    k = opts.get("k", 7)
    raw_trials = opts.get("trials", "default")
    if raw_trials == "default":
        trials = default_knn_trials()
    else:
        trials = [(rec["id"], _parse_spec(rec["spec"], "trials").realize()) for rec in raw_trials]
    overlap_fn = make_overlap_fn(config.shots, config.seed)

    results = []
    for idx, (tid, state) in enumerate(trials):
        results.append(knn_classify(state, training, k, overlap_fn, trial_id=tid, trial_index=idx))

    out = config.output_dir
    clusters = sorted({cl for _, cl in training})
    write_json(
        out / "knn_results.json",
        [
            {
                "trial": r.trial_id,
                "winner": r.winner,
                "proportions": {str(cl): r.proportions.get(cl, 0.0) for cl in clusters},
                "neighbors": [list(n) for n in r.neighbors],
                "ranked": [list(n) for n in r.ranked],
            }
            for r in results
        ],
    )
    write_csv(
        out / "knn_proportions.csv",
        ["trial", "winner"] + [f"cluster_{cl}" for cl in clusters],
        [[r.trial_id, r.winner, *(r.proportions.get(cl, 0.0) for cl in clusters)] for r in results],
    )
    write_csv(
        out / "knn_overlaps.csv",
        ["trial", "training_id", "cluster", "estimate"],
        [[r.trial_id, tid, cl, est] for r in results for tid, cl, est in r.ranked],
    )
    outputs = [str(out / n) for n in ("knn_results.json", "knn_proportions.csv", "knn_overlaps.csv")]

    # phase-space portraits of the trial states and final training centroids
    grid = np.linspace(-4.0, 4.0, 81)
    wigner_targets = list(trials)
    for state, name in _final_centroids_for_wigner(training):
        wigner_targets.append((name, state))
    for name, state in wigner_targets:
        rows = []
        w = wigner_grid(state, grid, grid)
        for i, x in enumerate(grid):
            for j, pp in enumerate(grid):
                rows.append([x, pp, w[i, j]])
        write_csv(out / f"wigner_{name}.csv", ["x", "p", "w"], rows)
        outputs.append(str(out / f"wigner_{name}.csv"))

    if config.figures:
        from . import plots

        outputs += plots.render_knn(results, clusters, wigner_targets, out)
    return {"outputs": outputs, "winners": {r.trial_id: r.winner for r in results}}


def _final_centroids_for_wigner(training) -> list[tuple[MotionalState, str]]:
    by_cluster: dict[int, list[MotionalState]] = {}
    for member, cl in training:
        by_cluster.setdefault(cl, []).append(member.state)
    out = []
    for cl in sorted(by_cluster):
        dim = max(s.dim for s in by_cluster[cl])
        mean = np.zeros(dim, dtype=complex)
        for s in by_cluster[cl]:
            mean[: s.dim] += s.amplitudes
        out.append((MotionalState.canonical(mean[:5]), f"centroid_{cl}"))
    return out


def _run_swap_matrix(config: ExperimentConfig) -> dict:
    opts = config.options

    def load(side):
        return [(rec["id"], _parse_spec(rec["spec"], side).realize()) for rec in opts[side]]

    rows, cols = load("rows"), load("cols")
    records = overlap_matrix(rows, cols, shots=config.shots, master_seed=config.seed)
    out = config.output_dir
    write_csv(
        out / "overlap_matrix.csv",
        ["row", "col", "estimate", "conf_low", "conf_high", "shots"],
        [[r["row"], r["col"], r["estimate"], r["conf_low"], r["conf_high"], r["shots"]] for r in records],
    )
    outputs = [str(out / "overlap_matrix.csv")]
    if config.figures:
        from . import plots

        outputs += plots.render_swap_matrix(records, out)
    return {"outputs": outputs}


def _default_delay_states() -> tuple[MotionalState, MotionalState]:
    quarter = MotionalState.canonical([1.0, 1.0, 1.0, 1.0])
    alternating = MotionalState.canonical([1.0, -1.0, 1.0, -1.0])
    return quarter, alternating


def _run_delay_scan(config: ExperimentConfig) -> dict:
    opts = config.options
    phi1, phi2 = _default_delay_states()
    state_b = _parse_spec(opts["state_b"], "state_b").realize() if "state_b" in opts else phi1
    state_c = _parse_spec(opts["state_c"], "state_c").realize() if "state_c" in opts else phi1
    alt = _parse_spec(opts["alternate"], "alternate").realize() if "alternate" in opts else phi2
    tau_max = opts.get("tau_max_us", 25.0) * 1e-6
    points = opts.get("points", 1000)
    taus = np.linspace(0.0, tau_max, points)

    series_main = delay_scan(state_b, state_c, config.trap, taus)
    series_alt = delay_scan(state_b, alt, config.trap, taus)
    out = config.output_dir
    write_csv(
        out / "delay_scan.csv",
        ["tau_us", "overlap_main", "overlap_alternate"],
        [
            [tau * 1e6, main, alt_v]
            for (tau, main), (_, alt_v) in zip(series_main, series_alt)
        ],
    )
    outputs = [str(out / "delay_scan.csv")]
    if config.figures:
        from . import plots

        outputs += plots.render_delay_scan(series_main, series_alt, out)
    period = 2.0 * math.pi / abs(config.trap.omega_c - config.trap.omega_b)
    return {"outputs": outputs, "nominal_period_us": period * 1e6}


def _run_synthesize(config: ExperimentConfig) -> dict:
    opts = config.options
    target = _parse_spec(opts["target"], "target").realize()
    sched = synthesize(target)
    trap = config.trap
    if opts.get("compensate", True):
        sched_out = compensate_stark(sched, trap.stark_shift, trap.omega_rsb)
    else:
        sched_out = sched
    report_clean = verify_schedule(sched, target)
    report_noise = verify_schedule(sched, target, stark_shift=trap.stark_shift, omega_rsb=trap.omega_rsb)
    report_comp = verify_schedule(
        compensate_stark(sched, trap.stark_shift, trap.omega_rsb),
        target,
        stark_shift=trap.stark_shift,
        omega_rsb=trap.omega_rsb,
    )
    out = config.output_dir
    payload = json.loads(sched_out.to_json())
    payload["durations_us"] = [p.duration(trap) * 1e6 for p in sched_out.pulses]
    payload["fidelity"] = {
        "clean": {"p_ground": report_clean.ground_probability, "overlap": report_clean.target_overlap},
        "stark_uncompensated": {
            "p_ground": report_noise.ground_probability,
            "overlap": report_noise.target_overlap,
        },
        "stark_compensated": {
            "p_ground": report_comp.ground_probability,
            "overlap": report_comp.target_overlap,
        },
    }
    write_json(out / "schedule.json", payload)
    outputs = [str(out / "schedule.json")]
    if config.figures:
        from . import plots

        outputs += plots.render_schedule(sched_out, target, out)
    return {"outputs": outputs, "fidelity": payload["fidelity"]}


def _run_characterize(config: ExperimentConfig) -> dict:
    opts = config.options
    if "populations" in opts:
        p = np.asarray(opts["populations"], dtype=float)
    else:
        spec_raw = opts.get("state", {"family": "coherent", "alpha": 1.2})
        state = _parse_spec(spec_raw, "state").realize()
        j_max = opts.get("j_max", 6)
        pops = state.padded(j_max + 1).populations()[: j_max + 1]
        p = pops / pops.sum()
    kind = opts.get("sideband", "red")
    trap = config.trap
    gamma = 2.0 * math.pi * opts.get("gamma_hz", 0.0)
    periods = opts.get("periods", 3.0)
    points = opts.get("points", 240)
    period = 2.0 * math.pi / trap.omega_rsb
    taus = np.linspace(period / points, periods * period, points)

    ideal = sideband_signal(p, trap.omega_rsb, gamma, taus, kind)
    observed = ideal if config.shots == 0 else sample_signal(ideal, config.shots, config.seed)
    fit = fit_populations(observed, j_max=opts.get("j_max", 6), float_rates=opts.get("float_rates", False))
    refit = sideband_signal(fit.populations, fit.omega_rsb, fit.gamma, taus, kind)

    out = config.output_dir
    write_csv(
        out / "characterize_signal.csv",
        ["tau_us", "pe_ideal", "pe_observed", "pe_fit"],
        [
            [t * 1e6, pi_, po, pf]
            for t, pi_, po, pf in zip(taus, ideal.pe, observed.pe, refit.pe)
        ],
    )
    from .characterize import write_signal_csv

    write_signal_csv(observed, out / "characterize_observed.csv")
    write_json(
        out / "characterize_populations.json",
        {
            "true": [float(v) for v in p],
            "fitted": [float(v) for v in fit.populations],
            "residual_norm": fit.residual_norm,
            "omega_rsb_hz": fit.omega_rsb / (2.0 * math.pi),
            "gamma_hz": fit.gamma / (2.0 * math.pi),
            "condition": fit.condition,
            "ill_conditioned": fit.ill_conditioned,
            "sideband": kind,
        },
    )
    outputs = [
        str(out / "characterize_signal.csv"),
        str(out / "characterize_observed.csv"),
        str(out / "characterize_populations.json"),
    ]
    if config.figures:
        from . import plots

        outputs += plots.render_characterize(taus, ideal, observed, refit, p, fit, out)
    return {"outputs": outputs, "max_error": float(np.max(np.abs(fit.populations - p)))}


def _run_ramsey_stark(config: ExperimentConfig) -> dict:
    opts = config.options
    trap = config.trap
    tau_max = opts.get("tau_max_us", 2.5 / (trap.stark_shift / (2.0 * math.pi)) * 1e6) * 1e-6
    points = opts.get("points", 200)
    taus = np.linspace(0.0, tau_max, points)
    off = ramsey_stark_scan(trap.stark_shift, taus, compensated=False, omega_rsb=trap.omega_rsb)
    on = ramsey_stark_scan(trap.stark_shift, taus, compensated=True, omega_rsb=trap.omega_rsb)
    out = config.output_dir
    write_csv(
        out / "ramsey_stark.csv",
        ["tau_us", "pe_uncompensated", "pe_compensated"],
        [[t * 1e6, pe_off, pe_on] for (t, pe_off), (_, pe_on) in zip(off, on)],
    )
    outputs = [str(out / "ramsey_stark.csv")]
    if config.figures:
        from . import plots

        outputs += plots.render_ramsey(off, on, out)
    return {"outputs": outputs}
