"""
Command-line front end.

    minmaxlb build <config>
    minmaxlb verify-lemmas [--samples N] [--seed S] [--output report.json]
    minmaxlb run <config>
    minmaxlb sweep <config>

Exit codes: 0 success, 1 verification or regime failure, 2 usage error.
"""

import argparse
import json
import sys

from .config import ConfigError, load_config
from .instances import RegimeError, build_scaled

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _dump(obj, fh=None):
    json.dump(obj, fh or sys.stdout, indent=2, sort_keys=True, default=str)
    (fh or sys.stdout).write("\n")


def _domain(spec):
    if not spec.stochastic:
        return "unconstrained (R^d)"
    lam = spec.lam
    return (
        f"box: |x|, |z| <= lambda*R1 = {lam * spec.R1:.6g}; "
        f"|y| <= lambda*n*R2 = {lam * spec.n * spec.R2:.6g}"
    )


def cmd_build(args):
    cfg = load_config(args.config)
    spec = cfg.spec()
    inst = build_scaled(spec)
    meta = inst.metadata()
    meta["domain"] = _domain(spec)
    _dump(meta)
    return EXIT_OK


def cmd_verify(args):
    from .verification import verify_all

    report = verify_all(samples=args.samples, seed=args.seed, only=args.only)
    for e in report.entries:
        flag = "PASS" if e.passed else "FAIL"
        print(f"{flag} {e.lemma:<11} samples={e.samples:<7} margin={e.worst_margin:.4g} ({e.runtime:.2f}s)",
              file=sys.stderr)
    if args.output:
        with open(args.output, "w") as fh:
            _dump(report.to_dict(), fh)
    else:
        _dump(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_run(args):
    from .experiments import run_experiment

    cfg = load_config(args.config)
    if args.workers:
        cfg.workers = args.workers
    _, meta = run_experiment(cfg)
    _dump(meta)
    return EXIT_OK if meta["summary"]["bound_violations"] == 0 else EXIT_FAIL


def cmd_sweep(args):
    from .experiments import run_sweep

    cfg = load_config(args.config)
    if cfg.sweep is None:
        raise ConfigError("sweep needs a [sweep] section")
    if args.workers:
        cfg.workers = args.workers
    _, meta = run_sweep(cfg)
    _dump({k: meta[k] for k in ("cells", "skipped", "slopes", "bound_violations")})
    return EXIT_OK if meta["bound_violations"] == 0 else EXIT_FAIL


def make_parser():
    ap = argparse.ArgumentParser(prog="minmaxlb", description=__doc__.split("\n\n")[0].strip())
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="validate a config and print the derived constants")
    b.add_argument("config")
    b.set_defaults(fn=cmd_build)

    v = sub.add_parser("verify-lemmas", help="run the randomized lemma checks")
    v.add_argument("--samples", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--only", nargs="*", default=None, help="subset of checks, e.g. gradient_floor first_column")
    v.add_argument("--output", default=None, help="write the JSON report here instead of stdout")
    v.set_defaults(fn=cmd_verify)

    for name, fn, text in (("run", cmd_run, "run replicas of one instance"),
                           ("sweep", cmd_sweep, "run a (kappa, eps, sigma) grid")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.add_argument("--workers", type=int, default=None)
        p.set_defaults(fn=fn)
    return ap


def main(argv=None):
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
