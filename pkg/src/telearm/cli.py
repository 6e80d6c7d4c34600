"""Command-line experiment runner.

    telearm run <scenario> [--mode virtual|live] [--seed N] [--out DIR] [--check]
    telearm report <dir>
    telearm list-scenarios

<scenario> is either a built-in name (see list-scenarios) or a path to a
YAML scenario file.  Exit codes: 0 success, 2 config error, 3 assertion
failure in --check mode.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import harness
from .netem import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK_FAILED = 3


def _resolve_scenario(spec: str) -> harness.Scenario:
    builtins = harness.builtin_scenarios()
    if spec in builtins:
        return builtins[spec]
    path = Path(spec)
    if path.exists():
        return harness.load_scenario(path)
    raise ConfigError(f"no built-in scenario or file named {spec!r}")


def _check_report(report: dict) -> list[str]:
    """Built-in sanity assertions for --check mode."""
    failures: list[str] = []
    for name, stats in report.get("links", {}).items():
        if stats.get("count", 0) and stats["mean_us"] < 0:
            failures.append(f"link {name}: negative mean latency")
    links = report.get("links", {})
    if "ethernet" in links and "oran" in links:
        if not links["ethernet"]["mean_us"] < links["oran"]["mean_us"]:
            failures.append("expected ethernet mean < oran mean")
    if "oran" in links and links["oran"].get("spike_count") not in (None, 2):
        failures.append(f"expected 2 oran blockage spikes, saw {links['oran']['spike_count']}")
    arm = report.get("arm")
    if arm is not None:
        total = arm["executed"] + arm["rejected"] + arm["discarded"] + arm["queued_final"]
        if total != arm["received"]:
            failures.append("arm accounting does not balance")
    return failures


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="telearm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("scenario", help="built-in name or YAML file path")
    p_run.add_argument("--mode", choices=["virtual", "live"], default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="output directory (default out/<name>)")
    p_run.add_argument("--check", action="store_true", help="fail (exit 3) on report anomalies")

    p_report = sub.add_parser("report", help="recompute aggregates from raw CSVs")
    p_report.add_argument("dir")

    sub.add_parser("list-scenarios", help="list built-in scenarios")

    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name, scenario in sorted(harness.builtin_scenarios().items()):
            kind = scenario.trace_kind or ("probes" if scenario.probe_profiles else "skew")
            print(f"{name:28s} {kind}")
        return EXIT_OK

    if args.command == "report":
        report_dir = Path(args.dir)
        if not report_dir.is_dir():
            print(f"error: {report_dir} is not a directory", file=sys.stderr)
            return EXIT_CONFIG
        print(json.dumps(harness.recompute_report(report_dir), indent=2, sort_keys=True))
        return EXIT_OK

    try:
        scenario = _resolve_scenario(args.scenario)
        if args.seed is not None:
            scenario = dataclasses.replace(scenario, seed=args.seed)
        if args.mode is not None:
            scenario = dataclasses.replace(scenario, mode=args.mode)
        if scenario.mode == "live":
            from . import live

            stats = live.run_live_loopback(duration_s=min(scenario.duration_s, 5.0))
            print(json.dumps(stats, indent=2, sort_keys=True))
            return EXIT_OK
        out_dir = Path(args.out) if args.out else Path("out") / scenario.name
        report = harness.run_scenario(scenario, out_dir)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.check:
        failures = _check_report(report)
        if failures:
            for failure in failures:
                print(f"CHECK FAILED: {failure}", file=sys.stderr)
            return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
