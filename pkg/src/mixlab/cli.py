"""Command-line entry point: verification harness and scenario runner.

Subcommands:

* ``verify <plan.json>``      run the plan's suites, write the report bundle
* ``covariance <plan.json>``  run the covariance suite only
* ``simulate <scenario.json>`` run the simulator, write report and CSV dumps
* ``report --format json|csv --out <dir> [--bundle <dir>]`` re-emit a bundle

Exit status: 0 all verdicts pass, 1 suite failures, 2 parse errors,
3 internal errors. ``MIXLAB_OUT`` overrides the output directory. Reports
are byte-deterministic under a fixed plan and seed; timestamps go to a
separate metadata file.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import time

from . import __version__, backend_name
from .report import SuiteReport, write_json, write_rows_csv
from .verification import SUITES, VerificationPlan, run_suite

EXIT_OK = 0
EXIT_SUITE_FAILURE = 1
EXIT_PARSE_ERROR = 2
EXIT_INTERNAL_ERROR = 3


def _out_dir(plan_dir: str) -> str:
    return os.environ.get("MIXLAB_OUT", plan_dir)


def _write_metadata(out: str, extra: dict) -> None:
    meta = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "version": __version__,
        "backend": backend_name(),
    }
    meta.update(extra)
    write_json(meta, os.path.join(out, "metadata.json"))


def _run_suites(plan: VerificationPlan, suites: list[str]) -> int:
    out = _out_dir(plan.out_dir)
    os.makedirs(out, exist_ok=True)
    failures = []
    for name in suites:
        report = run_suite(name, plan)
        if not report.rows:
            raise RuntimeError(f"suite {name} produced no rows")
        report.write(out)
        status = "pass" if report.passed else "FAIL"
        print(f"[{status}] suite {name}: {sum(r.passed for r in report.rows)}/{len(report.rows)} rows pass")
        for row in report.rows:
            if not row.passed:
                print(f"    fail {row.equation} [{row.variant}] linf={row.linf:.3e} tol={row.tolerance:.3e}")
        if not report.passed:
            failures.append(name)
    _write_metadata(out, {"plan": plan.to_dict(), "suites_run": suites})
    if failures:
        print(f"failed suites: {', '.join(failures)}")
        return EXIT_SUITE_FAILURE
    print(f"all suites pass; reports in {out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    plan = VerificationPlan.from_json(args.plan)
    return _run_suites(plan, plan.suites)


def _cmd_covariance(args) -> int:
    plan = VerificationPlan.from_json(args.plan)
    return _run_suites(plan, ["covariance"])


def _cmd_simulate(args) -> int:
    from . import simulate as sim

    config = sim.ScenarioConfig.from_json(args.scenario)
    out = _out_dir(args.out)
    os.makedirs(out, exist_ok=True)
    record, report = sim.run(config)
    write_json({"scenario": config.to_dict(), "conservation": report},
               os.path.join(out, "simulate_run.json"))
    record.dump_csv(out)
    _write_metadata(out, {"scenario": args.scenario})
    print(f"simulated {report['steps']} steps (dt={report['dt']:.3e}); "
          f"mass drift {report['mass_drift_mixture']:.3e}, "
          f"momentum drift {report['momentum_drift_relative']:.3e}; outputs in {out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    out = _out_dir(args.out)
    os.makedirs(out, exist_ok=True)
    bundle = args.bundle
    found = False
    for entry in sorted(os.listdir(bundle)):
        if not entry.endswith(".json") or entry == "metadata.json":
            continue
        found = True
        path = os.path.join(bundle, entry)
        with open(path) as handle:
            doc = json.load(handle)
        if args.format == "json":
            shutil.copyfile(path, os.path.join(out, entry))
        else:
            rows = doc.get("rows")
            if rows is None:
                shutil.copyfile(path, os.path.join(out, entry))
                continue
            from .report import ResidualRow

            parsed = [
                ResidualRow(r["equation"], r["variant"], r["linf"], r["l2"],
                            r["tolerance"], r["verdict"] == "pass")
                for r in rows
            ]
            write_rows_csv(parsed, os.path.join(out, entry[:-5] + ".csv"))
    if not found:
        print(f"no report JSON found in {bundle}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    print(f"re-emitted reports from {bundle} as {args.format} in {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixlab",
                                     description="Mixture balance-law verification laboratory")
    parser.add_argument("--version", action="version", version=f"mixlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Run the verification suites of a plan")
    verify.add_argument("plan", help="Path to a verification plan JSON")
    verify.set_defaults(func=_cmd_verify)

    cov = sub.add_parser("covariance", help="Run only the covariance suite of a plan")
    cov.add_argument("plan", help="Path to a verification plan JSON")
    cov.set_defaults(func=_cmd_covariance)

    simp = sub.add_parser("simulate", help="Run a simulator scenario")
    simp.add_argument("scenario", help="Path to a scenario JSON")
    simp.add_argument("--out", default="reports", help="Output directory")
    simp.set_defaults(func=_cmd_simulate)

    repp = sub.add_parser("report", help="Re-emit a report bundle as JSON or CSV")
    repp.add_argument("--format", choices=["json", "csv"], required=True)
    repp.add_argument("--out", required=True, help="Destination directory")
    repp.add_argument("--bundle", default="reports", help="Source bundle directory")
    repp.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (json.JSONDecodeError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except Exception as exc:  # noqa: BLE001 - contract: internal errors exit 3
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
