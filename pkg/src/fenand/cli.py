"""``fenand`` command line: run, calibrate, validate, list."""

import argparse
import json
import logging
import sys
import time

import tomli

from . import calibration as cal
from . import experiments as X
from . import kinetics as kin
from .cell import ExtractionError
from .config import ConfigError, ExperimentConfig, validate
from .electrostatics import SolverError


def _load(path):
    return ExperimentConfig() if path is None else ExperimentConfig.load(path)


def cmd_run(args):
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.with_values(seed=args.seed)
    start = time.perf_counter()
    try:
        result, paths = X.run_experiment(cfg, args.experiment, args.out, args.format)
    except (SolverError, ExtractionError, ArithmeticError) as exc:
        print(f"error: {args.experiment} failed: {exc}", file=sys.stderr)
        return 2
    print(X.summary_line(result, time.perf_counter() - start))
    for p in paths:
        print(f"  wrote {p}")
    return 0


def cmd_calibrate(args):
    cfg = _load(args.config)
    start_kinetics = cfg.kinetics() if args.from_config else kin.SwitchingKinetics()
    device = cfg.with_kinetics(start_kinetics).device()
    t0 = time.perf_counter()
    res = cal.calibrate(device, max_evaluations=args.max_evaluations, seed=cfg.seed)
    elapsed = time.perf_counter() - t0
    out_cfg = cfg.with_kinetics(res.kinetics)
    with open(args.output, "w") as fh:
        fh.write(out_cfg.to_toml())
    status = "converged" if res.report.ok else "did not converge"
    t23 = res.report.flip_times.get(2.3)
    print(f"calibrate: {status} moves={res.moves} evaluations={res.evaluations} "
          f"residual={res.report.residual:.4g} flip_2.3V={t23:.4g} s ({elapsed:.2f} s)")
    print(f"  wrote {args.output}")
    if not res.report.ok:
        print(f"  failing targets: {', '.join(res.report.failing)}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args):
    if args.config is None:
        raw = {}
    else:
        try:
            with open(args.config, "rb") as fh:
                raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            print(json.dumps({"diagnostics": [{"key": "", "message": f"TOML: {exc}"}]}, indent=2))
            return 1
    diags = validate(raw)
    doc = {"diagnostics": diags}
    if not diags:
        doc["config"] = ExperimentConfig(raw).merged()
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 1 if diags else 0


def cmd_list(args):
    for k, doc in X.describe().items():
        print(f"{k:16s} {doc}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="fenand", description="Dual-port FeFET NAND simulations")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment")
    r.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory (default from config: out)")
    r.add_argument("--format", choices=("csv", "json"))
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("calibrate", help="fit switching kinetics to the flip-time anchors")
    c.add_argument("--config")
    c.add_argument("--output", default="calibrated.toml")
    c.add_argument("--from-config", action="store_true",
                   help="start from the config's kinetics instead of the uncalibrated defaults")
    c.add_argument("--max-evaluations", type=int, default=400)
    c.set_defaults(func=cmd_calibrate)

    v = sub.add_parser("validate", help="check a config without simulating")
    v.add_argument("config", nargs="?")
    v.set_defaults(func=cmd_validate)

    ls = sub.add_parser("list", help="list experiment ids")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"diagnostics": exc.diagnostics}, indent=2), file=sys.stderr)
        return 1
    except X.UnknownExperiment as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
