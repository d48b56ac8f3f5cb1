"""Command-line entry point.

Verbs:
    run <config>    integrate one scenario, write its artifact directory
    sweep <config>  perturbation sweep (one run per amplitude)
    suite           run every packaged headline scenario
    check <config>  static audit: dissipativity, gain threshold, restrictions

Exit codes: 0 success, 1 configuration error, 2 numerical abort,
3 a run finished but failed its own gates (certificate violations).
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .config import ScenarioConfig
from .control import check_sim_restrictions
from .errors import ConfigError, IntegrationError, NeurofieldError
from .observer import alpha_star, check_dissipativity
from .runner import run_drift_study, run_perturbation_sweep, run_scenario

SUITE_SCENARIOS = (
    "observer",
    "observer_unexcited",
    "stabilization",
    "simultaneous",
    "perturbation_sweep",
    "drift",
    "high_gain",
)


def packaged_config(name: str) -> ScenarioConfig:
    ref = resources.files("neurofield") / "configs" / f"{name}.yaml"
    with resources.as_file(ref) as path:
        return ScenarioConfig.load(path)


def _cmd_run(args) -> int:
    config = ScenarioConfig.load(args.config)
    out = Path(args.out) if args.out else Path("runs") / Path(args.config).stem
    if config.mode == "perturbation_sweep":
        result = run_perturbation_sweep(config, out_dir=out)
        print(f"sweep finished: {len(result['rows'])} amplitudes -> {out}")
        return 0
    if config.mode == "drift_study":
        report = run_drift_study(config, out_dir=out)
    else:
        report = run_scenario(config, out_dir=out)
    _print_summary(report)
    return 0 if report.passed_gates else 3


def _cmd_sweep(args) -> int:
    config = ScenarioConfig.load(args.config)
    out = Path(args.out) if args.out else Path("runs") / (Path(args.config).stem + "_sweep")
    result = run_perturbation_sweep(config, out_dir=out)
    for row in result["rows"]:
        print(
            f"amplitude {row['amplitude']:>8g}  steady_max {row['steady_max']:.6g}  "
            f"steady_avg {row['steady_avg']:.6g}  oscillation {row['oscillation']}"
        )
    print(f"monotone first three: {result['monotone_first3']}, "
          f"oscillation onset: {result['oscillation_onset']}")
    return 0


def _cmd_suite(args) -> int:
    out_base = Path(args.out) if args.out else Path("runs") / "suite"
    worst = 0
    for name in SUITE_SCENARIOS:
        config = packaged_config(name)
        out = out_base / name
        print(f"== {name} ({config.mode}) -> {out}")
        if config.mode == "perturbation_sweep":
            run_perturbation_sweep(config, out_dir=out)
            continue
        if config.mode == "drift_study":
            report = run_drift_study(config, out_dir=out)
        else:
            report = run_scenario(config, out_dir=out)
        _print_summary(report)
        if not report.passed_gates:
            worst = 3
    return worst


def _cmd_check(args) -> int:
    config = ScenarioConfig.load(args.config)
    params = config.build_params()
    diss = check_dissipativity(params)
    print(f"dissipativity: holds={diss['holds']} margin={diss['margin']:.9g}")
    threshold = alpha_star(params)
    print(f"gain threshold: {threshold:.9g} (configured alpha = {params.alpha:g})")
    if params.alpha <= threshold:
        print("warning: alpha does not clear the threshold; no decrease certificate")
    if config.mode == "simultaneous_pe" or args.restrictions:
        audit = check_sim_restrictions(params)
        for code, (ok, detail) in audit.items():
            print(f"restriction ({code}): {'ok' if ok else 'VIOLATED'} [{detail}]")
        enforced_bad = [c for c in ("ii", "iv", "v", "vi") if not audit[c][0]]
        if config.mode == "simultaneous_pe" and enforced_bad:
            return 1
    return 0


def _print_summary(report) -> None:
    keys = (
        "steady_max", "steady_avg", "lyapunov_violations",
        "kappa_first", "kappa_last", "wtilde11_half_life",
    )
    parts = [f"{k}={report.summary[k]:.6g}" for k in keys
             if isinstance(report.summary.get(k), (int, float))]
    print(f"[{report.mode}] " + "  ".join(parts))
    for gate, ok in report.gates.items():
        print(f"  gate {gate}: {'pass' if ok else 'FAIL'}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="neurofield",
        description="Delayed neural-field simulation, kernel estimation, and adaptive control",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one scenario configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="perturbation sweep over amplitudes")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_suite = sub.add_parser("suite", help="run all packaged headline scenarios")
    p_suite.add_argument("--out", default=None)
    p_suite.set_defaults(fn=_cmd_suite)

    p_check = sub.add_parser("check", help="audit a configuration without integrating")
    p_check.add_argument("config")
    p_check.add_argument("--restrictions", action="store_true",
                         help="always print the simultaneous-mode restriction audit")
    p_check.set_defaults(fn=_cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except IntegrationError as exc:
        print(f"numerical abort at t={exc.t}: {exc}", file=sys.stderr)
        return 2
    except NeurofieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
