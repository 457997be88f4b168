"""``newtonmr`` command line: ``run``, ``profile`` and ``plot``.

Failures exit non-zero and print one JSON object ``{"error": ..., "message": ...}``
on stderr. ``NEWTONMR_OUTPUT_DIR`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..optim import read_trace
from .config import OUTPUT_ENV, ConfigError, load_config
from .plot import X_AXES, Y_AXES, plot_traces
from .profile import PROFILE_METRICS, performance_profile
from .runner import run_experiment

EXIT_USAGE = 2
EXIT_FAILURE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, EXIT_USAGE)


def _fail(kind, message, code):
    print(json.dumps({"error": kind, "message": str(message)}), file=sys.stderr)
    sys.exit(code)


def _default_out(name):
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) / name if env else Path(name)


def cmd_run(args):
    cfg = load_config(args.config, output_dir=args.output_dir)
    manifest = run_experiment(cfg)
    data = json.loads(manifest.read_text())
    n_err = len(data["errors"])
    print(f"{len(data['runs'])} runs, {n_err} failed; manifest: {manifest}")
    return 0


def cmd_profile(args):
    d = Path(args.trace_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"trace directory {str(d)!r} not found")
    files = sorted(p for p in d.glob("*__seed*.csv"))
    if not files:
        raise ValueError(f"no traces named <method>__seed<run>.csv in {str(d)!r}")
    prof = performance_profile([read_trace(p) for p in files], args.metric)
    text = prof.to_csv()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    for run, why in prof.excluded:
        print(f"run {run} excluded: {why}", file=sys.stderr)
    return 0


def cmd_plot(args):
    traces = [read_trace(p) for p in args.traces]
    out = Path(args.output) if args.output else _default_out(f"plot_{args.y}_vs_{args.x}.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    plot_traces(traces, args.x, args.y, args.log_y, out)
    print(out)
    return 0


def build_parser():
    p = _Parser(prog="newtonmr", description="Newton-MR experiment runner")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run an experiment config (TOML)")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None)
    r.set_defaults(func=cmd_run)
    pr = sub.add_parser("profile", help="performance profile of a directory of traces")
    pr.add_argument("trace_dir")
    pr.add_argument("--metric", required=True, choices=PROFILE_METRICS)
    pr.add_argument("--output", default=None)
    pr.set_defaults(func=cmd_profile)
    pl = sub.add_parser("plot", help="SVG plot of trace columns")
    pl.add_argument("traces", nargs="+")
    pl.add_argument("--x", default="iteration", choices=X_AXES)
    pl.add_argument("--y", default="grad_norm", choices=Y_AXES)
    pl.add_argument("--log-y", action="store_true")
    pl.add_argument("--output", default=None)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _fail("config", exc, EXIT_USAGE)
    except (OSError, ValueError) as exc:
        _fail(type(exc).__name__, exc, EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
