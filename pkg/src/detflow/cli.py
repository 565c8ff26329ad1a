"""Command-line front end.

    detflow run SCENARIO.json [--output FILE.csv] [--fail-threshold X]
                [--method rk4|rkf45] [--h X] [--tol X] [--quadrature Q]
    detflow check {linalg,identities,convergence,all} [--seed K]

Exit codes: 0 success, 1 property failure, 2 integration failure,
3 drift above --fail-threshold, 4 parse or validation error.
"""
import argparse
import json
import os
import sys
import tempfile

from detflow import checks, identity, ode
from detflow.coeffs import validate
from detflow.errors import IntegrationError, ParseError, ValidationError
from detflow.report import render_csv
from detflow.scenario_file import parse_scenario

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_INTEGRATION = 2
EXIT_THRESHOLD = 3
EXIT_INPUT = 4


def _fail(err, kind, message):
    print(json.dumps({"error": kind, "message": str(message)}), file=err)


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".detflow-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(s, out=None, *, fail_threshold=None, quadrature="trapezoid",
        stdout=None, stderr=None):
    """Integrate ``s``, evaluate the identities and write the CSV; return an exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        traj = ode.integrate(s)
    except IntegrationError as exc:
        _fail(stderr, type(exc).__name__, exc)
        return EXIT_INTEGRATION
    series = identity.all_series(s, traj, quadrature)
    report = identity.drift_report(s, traj, quadrature, series=series)
    text = render_csv(s, traj, series, report)
    if out is None:
        stdout.write(text)
    else:
        write_atomic(out, text)
    if fail_threshold is not None and report.max_drift() > fail_threshold:
        _fail(stderr, "ThresholdExceeded",
              f"max relative drift {report.max_drift()!r} > {fail_threshold!r}")
        return EXIT_THRESHOLD
    return EXIT_OK


def check(suite, seed, stdout=None):
    return EXIT_OK if checks.run(suite, seed, out=stdout or sys.stdout) else EXIT_PROPERTY


def build_parser():
    p = argparse.ArgumentParser(prog="detflow", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a scenario and write the CSV time series")
    r.add_argument("scenario")
    r.add_argument("--output", "-o")
    r.add_argument("--fail-threshold", type=float)
    r.add_argument("--method", choices=("rk4", "rkf45"))
    r.add_argument("--h", type=float)
    r.add_argument("--tol", type=float)
    r.add_argument("--quadrature", choices=identity.QUADRATURES, default="trapezoid")

    c = sub.add_parser("check", help="run a seeded property suite")
    c.add_argument("suite", choices=checks.SUITES + ("all",))
    c.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "check":
        return check(args.suite, args.seed)
    try:
        s = parse_scenario(args.scenario)
        overrides = {k: getattr(args, k) for k in ("method", "h", "tol")
                     if getattr(args, k) is not None}
        if overrides:
            s = validate(s.with_solver(**overrides))
    except (ParseError, ValidationError) as exc:
        _fail(sys.stderr, type(exc).__name__, exc)
        return EXIT_INPUT
    except OSError as exc:
        _fail(sys.stderr, "ParseError", exc)
        return EXIT_INPUT
    return run(s, args.output, fail_threshold=args.fail_threshold, quadrature=args.quadrature)


if __name__ == "__main__":
    sys.exit(main())
