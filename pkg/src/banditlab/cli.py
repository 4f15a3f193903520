"""Command line entry point: ``banditlab run | stop | summarize``.

Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .adv import NormalizationError
from .agg import PIMFailure
from .harness import ConfigError, ExperimentConfig, histogram_csv, read_csv, run, summarize, write_csv
from .stop import SampleLimitExceeded, StoppingConfig, ebgstop

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("banditlab")


def _parser():
    ap = argparse.ArgumentParser(prog="banditlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a seeded Monte Carlo experiment")
    r.add_argument("--config", required=True, help="JSON experiment configuration")
    r.add_argument("--out", help="CSV output path (defaults to the config's output)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--seed", type=int, help="override the master seed")

    s = sub.add_parser("stop", help="empirical Bernstein stopping on a sample stream")
    s.add_argument("source", help="file of newline-separated samples, or - for stdin")
    s.add_argument("--delta", type=float, default=0.1, help="relative accuracy")
    s.add_argument("--eps", type=float, default=0.05, help="failure probability")
    s.add_argument("--q", type=float, default=0.1)
    s.add_argument("--t1", type=int, default=20)
    s.add_argument("--alpha", type=float, default=1.1)
    s.add_argument("--a", type=float, default=0.0, help="data lie in [a, a + 1]")

    m = sub.add_parser("summarize", help="summary statistics of a results CSV")
    m.add_argument("csv")
    m.add_argument("--level", type=float, default=0.95)
    m.add_argument("--hist", type=int, default=0, metavar="BINS",
                   help="also print a binned histogram per metric")
    return ap


def _cmd_run(args):
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or cfg.output
    if out is None:
        raise ConfigError("no output path: pass --out or set 'output' in the config")
    if args.jobs < 1:
        raise ConfigError("--jobs must be positive")
    rows = run(cfg, jobs=args.jobs)
    write_csv(rows, out)
    log.info("wrote %d rows to %s", len(rows), out)


def _read_samples(source):
    fh = sys.stdin if source == "-" else open(source)
    try:
        vals = [float(line) for line in fh if line.strip()]
    except ValueError as exc:
        raise ConfigError(f"non-numeric sample: {exc}") from exc
    finally:
        if fh is not sys.stdin:
            fh.close()
    return np.array(vals)


def _cmd_stop(args):
    try:
        cfg = StoppingConfig(args.delta, args.eps, args.q, args.t1, args.alpha, args.a)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    data = _read_samples(args.source)
    try:
        res = ebgstop(data, cfg, max_samples=max(len(data), 1), keep_trace=True)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    w = sys.stdout.write
    w("estimate,T\n")
    w(f"{res.estimate!r},{res.T}\n")
    tr = res.trace
    w("t,mean,radius,LB,UB\n")
    for k in range(tr["t"].size):
        vals = [repr(float(tr[c][k])) for c in ("mean", "radius", "LB", "UB")]
        w(f"{int(tr['t'][k])},{','.join(vals)}\n")


def _cmd_summarize(args):
    try:
        rows = read_csv(args.csv)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {args.csv}: {exc}") from exc
    if not 0 < args.level < 1:
        raise ConfigError("--level must lie in (0, 1)")
    summ = summarize(rows, args.level)
    print(json.dumps(summ, indent=2))
    if args.hist:
        for metric in summ:
            print(f"# histogram of {metric}")
            sys.stdout.write(histogram_csv([r[metric] for r in rows], args.hist))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    cmd = {"run": _cmd_run, "stop": _cmd_stop, "summarize": _cmd_summarize}[args.cmd]
    try:
        cmd(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (NormalizationError, PIMFailure, SampleLimitExceeded, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return 0


if __name__ == "__main__":
    sys.exit(main())
