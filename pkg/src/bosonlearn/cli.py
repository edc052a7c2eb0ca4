"""Command-line entry point.

    bosonlearn run <config.json>        execute an experiment config
    bosonlearn validate <config.json>   check a config without running it
    bosonlearn dataset print            show the bundled 15-state dataset
    bosonlearn schedule show <spec>     pulse schedule for a target state

Exit codes: 0 success, 1 runtime failure, 2 unparseable config,
3 validation failure.  The default output directory can be set with the
BOSONLEARN_OUTPUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import ConfigError, ExperimentConfig, run_experiment
from .fock import StateSpec
from .ml import default_dataset
from .pulses import TrapConfig
from .synthesis import compensate_stark, synthesize, verify_schedule

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--output-dir", default=None, help="override the output directory")

    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config", help="path to a JSON experiment config")

    p_data = sub.add_parser("dataset", help="dataset utilities")
    p_data.add_argument("action", choices=["print"], help="what to do with the dataset")

    p_sched = sub.add_parser("schedule", help="pulse-schedule utilities")
    p_sched.add_argument("action", choices=["show"], help="what to do")
    p_sched.add_argument(
        "target",
        help="target state spec as inline JSON or @file, e.g. "
        '\'{"family": "fock_superposition", "phi": 1.5707963}\'',
    )
    p_sched.add_argument("--no-compensation", action="store_true",
                         help="skip the AC-Stark carrier-phase compensation")
    return parser


def _load_raw_config(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return None, EXIT_PARSE
    try:
        return json.loads(text), EXIT_OK
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return None, EXIT_PARSE


def _cmd_run(args) -> int:
    raw, code = _load_raw_config(args.config)
    if code != EXIT_OK:
        return code
    try:
        config = ExperimentConfig.from_dict(raw, output_dir=args.output_dir)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        summary = run_experiment(config, raw_echo=raw)
    except Exception as exc:  # deliberate catch-all: report and exit nonzero
        print(f"error: experiment failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in summary["outputs"]:
        print(path)
    return EXIT_OK


def _cmd_validate(args) -> int:
    raw, code = _load_raw_config(args.config)
    if code != EXIT_OK:
        return code
    try:
        config = ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"ok: {config.kind} config is valid")
    return EXIT_OK


def _cmd_dataset(args) -> int:
    data = default_dataset()
    print(f"{'id':8s} {'family':10s} {'dim':>4s}  parameters")
    for s in data:
        params = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in s.spec.params.items())
        print(f"{s.id:8s} {s.family:10s} {s.state.dim:4d}  {s.spec.family}({params})")
    return EXIT_OK


def _cmd_schedule(args) -> int:
    raw = args.target
    try:
        if raw.startswith("@"):
            raw = Path(raw[1:]).read_text()
        spec = StateSpec.from_dict(json.loads(raw))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: invalid target spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    trap = TrapConfig()
    try:
        sched = synthesize(spec.realize())
        if not args.no_compensation:
            sched = compensate_stark(sched, trap.stark_shift, trap.omega_rsb)
        report = verify_schedule(sched)
    except Exception as exc:
        print(f"error: synthesis failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    doc = json.loads(sched.to_json())
    doc["durations_us"] = [p.duration(trap) * 1e6 for p in sched.pulses]
    doc["round_trip"] = {
        "p_ground": report.ground_probability,
        "target_overlap": report.target_overlap,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "dataset": _cmd_dataset,
        "schedule": _cmd_schedule,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
