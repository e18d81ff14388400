"""Command-line entry point.

Exit status: 0 on success, 1 when a verification check fails, 2 on usage
errors. Precedence for every setting: flag, then ``--config`` file, then
built-in default; the effective settings are echoed into each JSON output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import LearnerConstants, lower_bound_gamma
from .hypotheses import ParameterError
from .learner import (
    NoConsistentGroup,
    SearchCapExceeded,
    run_naive_baseline,
    run_robust_collaborative,
    summary_csv,
    summary_row,
    user_errors,
)
from .oracles import Instance, make_instance
from .verification import (
    LemmaConfig,
    RunConfig,
    check_balls_in_bins,
    check_candidate_lemma,
    check_centralized_impossibility,
    check_lower_bound_cost,
    check_overhead_shape,
    check_pac,
    check_test_lemma,
    check_end_to_end,
    measure_overhead,
    overhead_csv,
    reports_csv,
)

SEED_ENV = "ROBUST_COLLAB_SEED"

DEFAULTS = {
    "generator": "random",
    "kind": "threshold",
    "n": 10,
    "d": 4,
    "eps": 0.1,
    "delta": 0.1,
    "eta": 0.0,
    "case": 0,
    "concentration": 1.0,
    "fake": "uniform",
    "trials": None,
    "jobs": 1,
    "scale": 1.0,
    "errors": "0.04,0.15",
    "group_size": 10,
    "adversaries": 1,
    "gamma": None,
}

CONSTANT_FLAGS = ("c_pac", "c_cand", "c_test", "c_bins", "c_final", "max_candidate_group")

CHECK_TRIALS = {
    "balls-in-bins": 1000,
    "candidate-lemma": 500,
    "test-lemma": 500,
    "end-to-end": 200,
    "pac": 500,
    "overhead": 200,
    "lower-bound": 100,
    "centralized": 0,
}


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with default settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--kind", choices=["threshold", "powerset"])
    p.add_argument("--concentration", type=float)
    p.add_argument("--fake", choices=["uniform", "close"])
    p.add_argument("--json", type=Path, help="write JSON here instead of stdout")
    p.add_argument("--csv", type=Path, help="also write a CSV summary")
    p.add_argument("--jobs", type=int)
    for name in CONSTANT_FLAGS:
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=int if name == "max_candidate_group" else float)


def _instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--generator", choices=["random", "lower-bound", "centralized"])
    p.add_argument("--case", type=int, choices=[0, 1])
    p.add_argument("--instance-file", type=Path, help="load an instance JSON instead of generating one")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-collab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("instance", help="generate or re-emit an instance JSON")
    _common(p)
    _instance_flags(p)

    for name, text in (("run", "run the robust collaborative learner"), ("baseline", "run the independent-learning baseline")):
        p = sub.add_parser(name, help=text)
        _common(p)
        _instance_flags(p)

    p = sub.add_parser("verify", help="run one verification check")
    _common(p)
    p.add_argument("--check", required=True, choices=sorted(CHECK_TRIALS))
    p.add_argument("--trials", type=int)
    p.add_argument("--scale", type=float, help="budget multiplier; < 1 gives a negative control")
    p.add_argument("--errors", help="planted errors for test-lemma, comma separated")
    p.add_argument("--group-size", dest="group_size", type=int)
    p.add_argument("--adversaries", type=int)
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("sweep", help="measure sample overhead over a parameter grid")
    _common(p)
    p.add_argument("--grid", action="append", required=True, help="key=v1,v2,... with key in n, d, eta")
    p.add_argument("--trials", type=int)
    return parser


def effective_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            settings.update(json.loads(args.config.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc}") from exc
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "json", "csv", "grid", "instance_file", "command"):
            settings[key] = value
    if settings.get("seed") is None and os.environ.get(SEED_ENV):
        try:
            settings["seed"] = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    if settings.get("seed") is None:
        if args.command in ("verify", "sweep"):
            raise UsageError(f"--seed is required for {args.command} (or set {SEED_ENV})")
        settings["seed"] = 0
    _validate(settings)
    return settings


def _validate(s: dict) -> None:
    if not 0 < s["eps"] <= 1:
        raise UsageError(f"--eps must lie in (0, 1], got {s['eps']}")
    if not 0 < s["delta"] <= 1:
        raise UsageError(f"--delta must lie in (0, 1], got {s['delta']}")
    if not 0 <= s["eta"] <= 1:
        raise UsageError(f"--eta must lie in [0, 1], got {s['eta']}")
    if s["n"] < 1:
        raise UsageError(f"--n must be >= 1, got {s['n']}")
    if s["d"] < 1:
        raise UsageError(f"--d must be >= 1, got {s['d']}")
    if s["jobs"] < 1:
        raise UsageError("--jobs must be >= 1")
    if s.get("trials") is not None and s["trials"] < 1:
        raise UsageError("--trials must be >= 1")
    for name in CONSTANT_FLAGS:
        if name in s and s[name] is not None and not s[name] > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def _constants(s: dict) -> LearnerConstants:
    return LearnerConstants.calibrated().override(**{k: s.get(k) for k in CONSTANT_FLAGS})


def _load_instance(args, s: dict) -> Instance:
    if args.instance_file:
        try:
            return Instance.from_dict(json.loads(args.instance_file.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise UsageError(f"--instance-file: cannot load {args.instance_file}: {exc}") from exc
    return make_instance(
        s["generator"],
        n=s["n"],
        d=s["d"],
        eps=s["eps"],
        eta=s["eta"],
        seed=s["seed"],
        case=s["case"],
        kind=s["kind"],
        concentration=s["concentration"],
        fake=s["fake"],
    )


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        path.write_text(text + "\n", encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _echo(s: dict, constants: LearnerConstants | None = None) -> dict:
    out = {k: v for k, v in sorted(s.items()) if k not in CONSTANT_FLAGS}
    if constants is not None:
        out["constants"] = constants.to_dict()
    return out


def cmd_instance(args, s) -> int:
    inst = _load_instance(args, s)
    _emit(inst.to_json(), args.json)
    return 0


def cmd_run(args, s) -> int:
    constants = _constants(s)
    inst = _load_instance(args, s)
    eta = s["eta"] if not args.instance_file else inst.eta
    if args.command == "run":
        result = run_robust_collaborative(inst, s["eps"], s["delta"], eta, constants)
    else:
        result = run_naive_baseline(inst, s["eps"], s["delta"], constants)
    errs = user_errors(inst, result)
    row = summary_row(inst, result, s["eps"], s["delta"])
    payload = {
        "config": _echo(s, constants),
        "instance": inst.generator,
        "result": result.to_dict(),
        "evaluation": {
            "user_errors": {str(i): e for i, e in sorted(errs.items())},
            "success": bool(row["success"]),
        },
    }
    _emit(_dump(payload), args.json)
    if args.csv:
        args.csv.write_text(summary_csv([row]), encoding="utf-8")
    return 0


def cmd_verify(args, s) -> int:
    constants = _constants(s)
    check = s["check"]
    trials = s["trials"] or CHECK_TRIALS[check]
    seed, jobs, scale = s["seed"], s["jobs"], s["scale"]
    if check == "balls-in-bins":
        report = check_balls_in_bins(s["n"], constants.c_bins, s["delta"], trials, seed, scale, jobs)
    elif check == "candidate-lemma":
        cfg = LemmaConfig(s["group_size"], s["adversaries"], s["kind"], s["d"], s["eps"], s["delta"], "close", s["concentration"], constants)
        report = check_candidate_lemma(cfg, trials, seed, scale, jobs)
    elif check == "test-lemma":
        try:
            errors = tuple(float(x) for x in str(s["errors"]).split(","))
        except ValueError as exc:
            raise UsageError(f"--errors: {exc}") from exc
        report = check_test_lemma(errors, s["eps"], s["delta"], trials, seed, constants, scale, jobs)
    elif check == "centralized":
        report = check_centralized_impossibility(max(3, s["n"]))
    elif check == "end-to-end":
        cfg = RunConfig(s["n"], s["d"], s["kind"], s["eta"], s["eps"], s["delta"], s["concentration"], s["fake"], constants)
        report = check_end_to_end(cfg, trials, seed, scale=scale, jobs=jobs)
    elif check == "pac":
        report = check_pac(s["kind"], s["d"], s["eps"], s["delta"], constants.c_pac, trials, seed, jobs)
    elif check == "overhead":
        report = check_overhead_shape(trials, seed, constants, jobs=jobs)
    else:
        gamma = s["gamma"] if s["gamma"] is not None else lower_bound_gamma()
        report = check_lower_bound_cost(s["n"], s["d"], s["eps"], s["delta"], s["eta"], gamma, trials, seed, constants, jobs)
    payload = report.to_dict() | {"effective_config": _echo(s, constants)}
    _emit(_dump(payload), args.json)
    if args.csv:
        args.csv.write_text(reports_csv([report]), encoding="utf-8")
    print(report.summary(), file=sys.stderr)
    return 0 if report.passed else 1


def parse_grid(specs) -> dict:
    grid = {}
    for spec in specs:
        key, sep, values = spec.partition("=")
        key = key.strip()
        if not sep or key not in ("n", "d", "eta"):
            raise UsageError(f"--grid: expected n=..., d=... or eta=..., got {spec!r}")
        try:
            conv = float if key == "eta" else int
            grid[key] = [conv(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise UsageError(f"--grid {key}: {exc}") from exc
        if not grid[key]:
            raise UsageError(f"--grid {key}: no values")
    return grid


def cmd_sweep(args, s) -> int:
    constants = _constants(s)
    grid = parse_grid(args.grid)
    ns = grid.get("n", [s["n"]])
    etas = grid.get("eta", [s["eta"]])
    points = []
    for n in ns:
        # n = d unless d is swept or fixed explicitly
        ds = grid.get("d", [n if args.d is None else s["d"]])
        for d in ds:
            for eta in etas:
                points.append((n, d, eta))
    trials = s["trials"] or CHECK_TRIALS["overhead"]
    estimates = measure_overhead(points, trials, s["seed"], constants, kind="powerset", concentration=s["concentration"], jobs=s["jobs"])
    payload = {"config": _echo(s, constants) | {"grid": grid}, "estimates": [e.to_dict() for e in estimates]}
    _emit(_dump(payload), args.json)
    if args.csv:
        args.csv.write_text(overhead_csv(estimates), encoding="utf-8")
    return 0


COMMANDS = {"instance": cmd_instance, "run": cmd_run, "baseline": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = effective_settings(args)
        return COMMANDS[args.command](args, settings)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (NoConsistentGroup, SearchCapExceeded) as exc:
        print(f"{parser.prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
