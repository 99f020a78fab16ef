"""``difflim <experiment> --config FILE [--seed U64] [--jobs K] [--out DIR]``.

Exit codes: 0 when every pass criterion holds, 1 when some criterion fails,
2 when the config is invalid or the experiment refuses to run.
"""

import argparse
import os
import sys

from . import config as cfgmod
from .experiments import Refusal, run_experiment
from .output import refusal_verdict, write_report, write_verdict

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_REFUSED = 2


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="difflim", description="Run a named experiment and write CSV tables plus a JSON verdict.")
    ap.add_argument("experiment", choices=cfgmod.EXPERIMENTS)
    ap.add_argument("--config", required=True, help="INI file with a section named after the experiment")
    ap.add_argument("--seed", type=_u64, default=None, help="overrides the seed in the config")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for replica ensembles")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    verdict_path = os.path.join(args.out, f"{args.experiment}_verdict.json")
    params = None
    try:
        params = cfgmod.load(args.config, args.experiment)
        if args.seed is not None:
            params["seed"] = args.seed
        if args.jobs < 1:
            raise cfgmod.ConfigError("--jobs must be at least 1")
        report = run_experiment(args.experiment, params, args.jobs)
    except (Refusal, ValueError, OSError) as exc:
        kind = "refused" if isinstance(exc, Refusal) else "error"
        print(f"difflim {args.experiment}: {kind}: {exc}", file=sys.stderr)
        write_verdict(verdict_path, refusal_verdict(args.experiment, str(exc), params))
        return EXIT_REFUSED
    files = write_report(report, args.out)
    if not args.no_plot:
        from .plotting import render

        files.append(render(args.experiment, args.out))
    for c in report.criteria:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {_short(c.value)} (threshold {_short(c.threshold)})")
    print(f"{args.experiment}: {'PASS' if report.passed else 'FAIL'}; wrote {len(files)} files to {args.out}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
