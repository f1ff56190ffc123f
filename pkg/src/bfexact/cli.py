"""Command-line front end: ``bfexact {test,simulate,tp,chapman,replay}``.

Every command that writes a file also writes ``<output>.manifest.json``
recording the resolved parameters; ``bfexact replay <manifest>`` re-runs it.

Exit codes: 0 success, 1 numeric failure, 2 degenerate data, 64 usage or
input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, dist
from . import sim as sim_mod
from . import tp_family
from . import two_stage
from .bf_tests import Method, run_test
from .errors import BFExactError, DegenerateDataError, NumericAccuracyError
from .svgplot import line_chart

EXIT_OK, EXIT_NUMERIC, EXIT_DEGENERATE, EXIT_USAGE = 0, 1, 2, 64
CONFIG_KEYS = ("m", "n", "variance_grid", "mu_diff", "alpha", "reps", "seed", "methods", "threads")


class UsageError(Exception):
    """Bad invocation or malformed input; maps to exit code 64."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def read_groups(path):
    """Read a ``group,value`` CSV into the x and y samples."""
    groups = {"x": [], "y": []}
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["group", "value"]:
            raise UsageError(f"{path}:1: expected header 'group,value'")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise UsageError(f"{path}:{line}: expected 2 fields, got {len(row)}")
            g = row[0].strip().lower()
            if g not in groups:
                raise UsageError(f"{path}:{line}: group must be 'x' or 'y', got {row[0]!r}")
            try:
                v = float(row[1])
            except ValueError:
                raise UsageError(f"{path}:{line}: value {row[1]!r} is not a number") from None
            if not math.isfinite(v):
                raise UsageError(f"{path}:{line}: value must be finite")
            groups[g].append(v)
    for g, vals in groups.items():
        if len(vals) < 2:
            raise UsageError(f"{path}: group {g!r} needs at least 2 rows, found {len(vals)}")
    return np.array(groups["x"]), np.array(groups["y"])


def _floats(text, name):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{name}: empty list")
    return vals


def _pair(text):
    vals = _floats(text, "--sigma-sq")
    if len(vals) != 2:
        raise UsageError(f"--sigma-sq expects 'a,b', got {text!r}")
    return tuple(vals)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def write_manifest(out_path, command, params, outputs):
    manifest = {
        "command": command,
        "params": params,
        "seed": params.get("seed"),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": outputs,
    }
    path = f"{out_path}.manifest.json"
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _emit(args, command, params, text, extra_outputs=()):
    if args.out:
        _write_text(args.out, text)
        write_manifest(args.out, command, params, [args.out, *extra_outputs])
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_test(args):
    x, y = read_groups(args.input)
    method = Method.parse(args.method)
    if method is Method.TP:
        out = tp_family.tp_test(x, y, p=args.p, alpha=args.alpha, delta0=args.delta0)
    else:
        rng = dist.RngStream(args.seed)
        out = run_test(method, x, y, args.delta0, args.alpha, rng=rng, tail=args.tail)
    print(f"method     {out.method.value}")
    print(f"statistic  {out.statistic:.10g}")
    print(f"df         {out.df:.10g}")
    print(f"p-value    {out.p_value:.10g}")
    print(f"CI         [{out.ci_low:.10g}, {out.ci_high:.10g}] at level {1 - out.alpha:g}")
    if args.out:
        d = out.as_dict()
        text = _csv_text(list(d), [[_fmt(v) for v in d.values()]])
        params = {"input": args.input, "method": method.value, "delta0": args.delta0, "alpha": args.alpha,
                  "tail": args.tail, "seed": args.seed, "p": args.p}
        _write_text(args.out, text)
        write_manifest(args.out, "test", params, [args.out])
    return EXIT_OK


def _sweep_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        bad = sorted(set(cfg) - set(CONFIG_KEYS))
        if bad:
            raise UsageError(f"invalid config keys {bad}; valid keys are {list(CONFIG_KEYS)}")
    for key, val in (("m", args.m), ("n", args.n), ("reps", args.reps), ("seed", args.seed),
                     ("mu_diff", args.mu_diff), ("alpha", args.alpha), ("threads", args.threads)):
        if val is not None:
            cfg[key] = val
    if args.method:
        cfg["methods"] = [m for spec in args.method for m in spec.split(",") if m]
    if args.sigma_sq:
        cfg["variance_grid"] = [_pair(s) for s in args.sigma_sq]
    threads = cfg.pop("threads", None)
    return sim_mod.SweepConfig(**cfg), threads


def sweep_svg(result: sim_mod.SweepResult, config: sim_mod.SweepConfig) -> str:
    series = {m.value: list(result.rates(m)) for m in config.methods}
    labels = [f"{int(a) if a.is_integer() else a}" for a, _ in config.variance_grid]
    kind = "power" if config.mu_diff else "type I error"
    return line_chart(
        series, labels, title=f"{kind}, (m, n) = ({config.m}, {config.n}), mu_diff = {config.mu_diff:g}",
        y_label="rejection rate", hline=config.alpha,
    )


def cmd_simulate(args):
    config, threads = _sweep_config(args)
    result = sim_mod.run_sweep(config, threads=threads)
    text = result.to_csv()
    extra = []
    if args.svg:
        _write_text(args.svg, sweep_svg(result, config))
        extra.append(args.svg)
    params = config.as_dict()
    _emit(args, "simulate", params, text, extra)
    if args.svg and not args.out:
        write_manifest(args.svg, "simulate", params, extra)
    return EXIT_OK


def cmd_tp(args):
    grid = _floats(args.p_grid, "--p-grid")
    if any(p <= 0 for p in grid):
        raise UsageError("--p-grid values must be positive")
    rows = []
    for p in grid:
        model = tp_family.ci_length_expectation(args.n, p, args.alpha)
        rows.append([_fmt(model.p), _fmt(model.q_alpha), _fmt(model.expectation), _fmt(model.length)])
    report = tp_family.stationarity_check(args.n, args.alpha, h=args.h, grid=())
    # footer: derivative, relative derivative and l(2) in the three value columns
    rows.append(["l'(2)", _fmt(report.l_deriv_at_2), _fmt(report.relative_derivative), _fmt(report.l_at_2)])
    text = _csv_text(["p", "quantile", "expectation", "l"], rows)
    best = min(rows[:-1], key=lambda r: float(r[3]))[0]
    print(
        f"l'(2) = {report.l_deriv_at_2:.3e}, |l'(2)|/l(2) = {report.relative_derivative:.3e}, "
        f"grid argmin p = {best}",
        file=sys.stderr,
    )
    params = {"n": args.n, "alpha": args.alpha, "p_grid": grid, "h": args.h, "seed": None}
    _emit(args, "tp", params, text)
    return EXIT_OK


CHAPMAN_COLUMNS = (
    "sigma1_sq", "sigma2_sq", "n0", "d", "alpha", "reps", "seed", "chapman_width", "chapman_noncoverage",
    "te_mean_length", "te_noncoverage", "mean_n1", "mean_n2", "caveat",
)


def cmd_chapman(args):
    if args.reps < 1000:
        raise UsageError("--reps must be at least 1000")
    pairs = [_pair(s) for s in args.sigma_sq] if args.sigma_sq else [(1.0, 25.0)]
    rows = []
    for i, (s1, s2) in enumerate(pairs):
        res = two_stage.chapman_vs_te(s1, s2, n0=args.n0, d=args.d, alpha=args.alpha, reps=args.reps,
                                      seed=args.seed, stream_path=(i,))
        d = res.as_dict()
        rows.append([_fmt(d[c]) for c in CHAPMAN_COLUMNS])
        print(f"sigma^2 = ({s1:g}, {s2:g}): chapman width {res.chapman_width:.4g}, "
              f"T_e mean length {res.te_mean_length:.4g}", file=sys.stderr)
    print(f"note: {two_stage.COMBINED_CAVEAT}", file=sys.stderr)
    params = {"n0": args.n0, "d": args.d, "alpha": args.alpha, "sigma_sq": [list(p) for p in pairs],
              "reps": args.reps, "seed": args.seed}
    _emit(args, "chapman", params, _csv_text(CHAPMAN_COLUMNS, rows))
    return EXIT_OK


def manifest_argv(manifest) -> list:
    """Rebuild a command line from a manifest written by this module."""
    cmd, p = manifest["command"], manifest["params"]
    outputs = manifest.get("outputs", [])
    if cmd == "test":
        argv = ["test", p["input"], "--method", p["method"], "--delta0", repr(p["delta0"]),
                "--alpha", repr(p["alpha"]), "--tail", p["tail"], "--seed", str(p["seed"]), "--p", repr(p["p"])]
    elif cmd == "simulate":
        argv = ["simulate", "--m", str(p["m"]), "--n", str(p["n"]), "--reps", str(p["reps"]),
                "--seed", str(p["seed"]), "--mu-diff", repr(p["mu_diff"]), "--alpha", repr(p["alpha"]),
                "--method", ",".join(p["methods"])]
        for a, b in p["variance_grid"]:
            argv += ["--sigma-sq", f"{a!r},{b!r}"]
        svgs = [o for o in outputs if o.endswith(".svg")]
        if svgs:
            argv += ["--svg", svgs[0]]
        outputs = [o for o in outputs if not o.endswith(".svg")]
    elif cmd == "tp":
        argv = ["tp", "--n", str(p["n"]), "--alpha", repr(p["alpha"]),
                "--p-grid", ",".join(repr(v) for v in p["p_grid"]), "--h", repr(p["h"])]
    elif cmd == "chapman":
        argv = ["chapman", "--n0", str(p["n0"]), "--d", repr(p["d"]), "--alpha", repr(p["alpha"]),
                "--reps", str(p["reps"]), "--seed", str(p["seed"])]
        for a, b in p["sigma_sq"]:
            argv += ["--sigma-sq", f"{a!r},{b!r}"]
    else:
        raise UsageError(f"unknown manifest command {cmd!r}")
    if outputs:
        argv += ["--out", outputs[0]]
    return argv


def cmd_replay(args):
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load manifest {args.manifest}: {exc}") from None
    return main(manifest_argv(manifest))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _level(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bfexact", description="Exact two-sample mean comparisons with unequal variances.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="run a test on a group,value CSV")
    p.add_argument("input", help="CSV with header group,value and groups x and y")
    p.add_argument("--method", default="te", help="te, tn, welch, paired, scheffe or tp (default te)")
    p.add_argument("--delta0", type=float, default=0.0)
    p.add_argument("--alpha", type=_level, default=0.05)
    p.add_argument("--tail", choices=("two-sided", "greater", "less"), default="two-sided")
    p.add_argument("--seed", type=_seed, default=0, help="stream seed for the paired-test subselection")
    p.add_argument("--p", type=float, default=2.0, help="exponent for --method tp")
    p.add_argument("--out", help="write the outcome as a one-row CSV")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="size or power sweep over a variance grid")
    p.add_argument("--config", help=f"JSON file with keys among {', '.join(CONFIG_KEYS)}")
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--reps", type=_positive_int, help="replications per grid point (100000 for full fidelity)")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--mu-diff", type=float, help="mu_x - mu_y; 2 gives the power sweep")
    p.add_argument("--alpha", type=_level)
    p.add_argument("--method", action="append", help="method or comma list; repeatable")
    p.add_argument("--sigma-sq", action="append", help="variance pair 'a,b'; repeatable (default canonical grid)")
    p.add_argument("--threads", type=int, help="worker processes (overrides BF_EXACT_THREADS; 0 = auto)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--svg", help="write a line chart of the rates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tp", help="tabulate the expected interval length l(p)")
    p.add_argument("--n", type=_positive_int, default=5)
    p.add_argument("--alpha", type=_level, default=0.05)
    p.add_argument("--p-grid", default="0.5,1,1.5,2,2.5,3,4")
    p.add_argument("--h", type=float, default=0.05, help="central-difference step at p = 2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tp)

    p = sub.add_parser("chapman", help="Chapman two-stage procedure versus pooled T_e")
    p.add_argument("--n0", type=int, default=10)
    p.add_argument("--d", type=float, default=1.0, help="half-width of the fixed-width interval")
    p.add_argument("--alpha", type=_level, default=0.05)
    p.add_argument("--sigma-sq", action="append", help="variance pair 'a,b'; repeatable (default 1,25)")
    p.add_argument("--reps", type=int, default=20_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_chapman)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateDataError as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NumericAccuracyError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BFExactError as exc:
        # domain, protocol and infeasible-design errors come from bad inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
