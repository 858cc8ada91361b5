"""Command-line front end: channel constants, bound tables, identity
verification suites, and broadcast simulations.

Exit codes: 0 success, 1 tolerance breach in verify, 2 input validation,
3 numerical non-convergence, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bounds import (DELTA2_GRID, bound_report, report_to_dict,
                     reports_from_json, reports_to_json, table1,
                     table_from_csv, table_to_csv)
from .channels import (Channel, binary_channel, channel_from_json,
                       channel_to_json, potts_channel)
from .errors import ChannelError, NoConvergence, NumericalUnderflow
from .oracle import (BAYES_TOL, LEMMA1_TOL, PROPAGATION_TOL, RECURSION_TOL,
                     bayes_vs_recursion, check_lemma1, check_lyapunov_bound,
                     check_main_recursion, check_propagation, run_suite)
from .treesim import TreeSpec, depth_sweep, sample_tree
from .variational import OptimizerConfig, compute_c

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_USAGE = 64

LYAPUNOV_MARGIN_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this front end reserves 2 for
    input validation and uses 64 for usage errors instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _add_channel_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("channel")
    g.add_argument("--channel", metavar="JSON_OR_PATH",
                   help="channel as inline JSON or a path to a JSON file")
    g.add_argument("--family", choices=("potts", "binary"),
                   help="built-in channel family")
    g.add_argument("--q", type=int, help="number of states (potts)")
    g.add_argument("--beta", type=float, help="inverse temperature (potts)")
    g.add_argument("--delta1", type=float, help="row-1 flip probability (binary)")
    g.add_argument("--delta2", type=float, help="row-2 stay probability (binary)")


def _add_optimizer_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("optimizer")
    g.add_argument("--starts", type=int, default=64)
    g.add_argument("--max-iters", type=int, default=4000)
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--grid-points", type=int, default=200_000)


def _add_common_args(p: argparse.ArgumentParser, *, default_format=None) -> None:
    p.add_argument("--format", choices=("json", "csv", "table"),
                   default=default_format)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads; 0 = one per CPU "
                        "(default: TREE_RECON_THREADS or 1)")


def _resolve_channel(args) -> Channel:
    if args.channel is not None and args.family is not None:
        raise ChannelError("give either --channel or --family, not both")
    if args.channel is not None:
        text = args.channel.strip()
        if not text.startswith("{"):
            with open(args.channel, "r", encoding="utf-8") as handle:
                text = handle.read()
        return channel_from_json(json.loads(text))
    if args.family == "potts":
        if args.q is None or args.beta is None:
            raise ChannelError("--family potts needs --q and --beta")
        return potts_channel(args.q, args.beta)
    if args.family == "binary":
        if args.delta1 is None or args.delta2 is None:
            raise ChannelError("--family binary needs --delta1 and --delta2")
        return binary_channel(args.delta1, args.delta2)
    raise ChannelError("no channel given: use --channel or --family")


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(starts=args.starts, max_iters=args.max_iters,
                           tol=args.tol, seed=args.seed,
                           grid_points=args.grid_points)


def _threads(args) -> int | None:
    value = args.threads
    if value is None:
        env = os.environ.get("TREE_RECON_THREADS")
        if env is None or env.strip() == "":
            return 1
        value = int(env)
    if value < 0:
        raise ValueError(f"--threads must be >= 0, got {value}")
    return None if value == 0 else value


def _format(args, default_pipe="csv") -> str:
    if args.format is not None:
        return args.format
    return "table" if sys.stdout.isatty() else default_pipe


def _parse_tree(text: str, depth: int) -> TreeSpec:
    kind, _, params = text.partition(":")
    if kind == "regular":
        key, _, value = params.partition("=")
        if key != "d" or not value:
            raise ChannelError(f"regular tree syntax is regular:d=<int>, got {text!r}")
        return TreeSpec.regular(int(value), depth)
    if kind == "gw":
        key, _, value = params.partition("=")
        if key != "pmf" or not value:
            raise ChannelError(f"offspring tree syntax is gw:pmf=p1,p2,..., got {text!r}")
        pmf = tuple(float(x) for x in value.split(","))
        return TreeSpec.galton_watson(pmf, depth)
    raise ChannelError(f"unknown tree kind {kind!r} (use regular:d=... or gw:pmf=...)")


def _parse_sweep(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise ChannelError(f"depth sweep syntax is a..b, got {text!r}")
    a, b = int(lo), int(hi)
    if a < 1 or b < a:
        raise ChannelError(f"need 1 <= a <= b in depth sweep, got {text!r}")
    return list(range(a, b + 1))


# ---------------------------------------------------------------- c-of-m


def _cmd_c_of_m(args) -> int:
    channel = _resolve_channel(args)
    result = compute_c(channel, _optimizer_config(args), threads=_threads(args))
    trace = result.trace
    report = {
        "command": "c-of-m",
        "channel": channel_to_json(channel),
        "value": round(result.value, 6),
        "argmax": [float(x) for x in result.argmax],
        "near_center_limit": round(trace.near_center_value, 6),
        "near_center_is_max": bool(trace.near_center_is_max),
        "method": trace.method,
        "starts": int(trace.starts),
        "seed": int(trace.seed),
    }
    fmt = _format(args)
    if fmt == "json":
        print(_json_text(report))
    elif fmt == "csv":
        print("value,near_center_limit,near_center_is_max")
        flag = "true" if report["near_center_is_max"] else "false"
        print(f"{result.value:.6f},{trace.near_center_value:.6f},{flag}")
    else:
        print(f"c = {result.value:.6f}")
        print("argmax = [" + ", ".join(f"{x:.6f}" for x in result.argmax) + "]")
        yn = "yes" if trace.near_center_is_max else "no"
        print(f"near-center limit = {trace.near_center_value:.6f} (is maximizer: {yn})")
        print(f"method = {trace.method}; starts = {trace.starts}; seed = {trace.seed}")
    return EXIT_OK


# ---------------------------------------------------------------- bounds


def _bounds_csv(report) -> str:
    lines = ["bound,constant,verdict"]
    for name in ("fk", "ks", "martin", "mp"):
        value = getattr(report, name)
        if value is None:
            continue
        verdict = report.verdicts.get(name, "")
        lines.append(f"{name},{value:.4f},{verdict}")
    return "\n".join(lines) + "\n"


def _bounds_csv_rows(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "bound,constant,verdict":
        raise ValueError("expected header 'bound,constant,verdict'")
    rows = []
    for ln in lines[1:]:
        name, value, verdict = ln.split(",", 2)
        rows.append({"bound": name, "constant": float(value), "verdict": verdict})
    return rows


def _render_bounds_rows(rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        print(_json_text({"command": "bounds", "rows": rows}))
    elif fmt == "csv":
        print("bound,constant,verdict")
        for r in rows:
            print(f"{r['bound']},{r['constant']:.4f},{r['verdict']}")
    else:
        for r in rows:
            print(f"{r['bound']:<8} {r['constant']:.4f}  {r['verdict']}")


def _cmd_bounds(args) -> int:
    fmt = _format(args)
    if args.from_file:
        with open(args.from_file, "r", encoding="utf-8") as handle:
            text = handle.read()
        if text.lstrip().startswith("{"):
            obj = reports_from_json(text)
            if fmt == "json":
                print(_json_text(obj))
            else:
                for rep in obj["reports"]:
                    rows = [
                        {"bound": k, "constant": v,
                         "verdict": rep["verdicts"].get(k, "")}
                        for k, v in sorted(rep["constants"].items())
                        if v is not None
                    ]
                    _render_bounds_rows(rows, fmt)
        else:
            _render_bounds_rows(_bounds_csv_rows(text), fmt)
        return EXIT_OK
    channel = _resolve_channel(args)
    report = bound_report(channel, args.branching,
                          config=_optimizer_config(args), threads=_threads(args))
    if fmt == "json":
        print(reports_to_json([report], command="bounds", seed=int(args.seed)),
              end="")
    elif fmt == "csv":
        print(_bounds_csv(report), end="")
    else:
        head = f"channel: {report.channel_desc}"
        if report.branching is not None:
            head += f"   branching: {report.branching:g}"
        print(head)
        for name in ("fk", "ks", "martin", "mp"):
            value = getattr(report, name)
            if value is None:
                continue
            verdict = report.verdicts.get(name, "")
            print(f"  {name:<8} {value:.4f}  {verdict}")
    return EXIT_OK


# ---------------------------------------------------------------- table1


def _render_table_rows(rows: list[dict], fmt: str) -> None:
    cols = ("delta2", "ks", "fk", "martin", "mp")
    if fmt == "json":
        print(_json_text({"command": "table1", "rows": rows}))
    elif fmt == "csv":
        print(",".join(cols))
        for r in rows:
            print(",".join("" if r[c] is None else f"{r[c]:.4f}" for c in cols))
    else:
        print("  ".join(f"{c:>8}" for c in cols))
        for r in rows:
            print("  ".join("        " if r[c] is None else f"{r[c]:8.4f}"
                            for c in cols))


def _cmd_table1(args) -> int:
    fmt = _format(args)
    if args.from_file:
        with open(args.from_file, "r", encoding="utf-8") as handle:
            text = handle.read()
        if text.lstrip().startswith("{"):
            obj = reports_from_json(text)
            rows = [
                {"delta2": rep.get("delta2"),
                 "ks": rep["constants"]["ks"], "fk": rep["constants"]["fk"],
                 "martin": rep["constants"]["martin"],
                 "mp": rep["constants"]["mp"]}
                for rep in obj["reports"]
            ]
        else:
            rows = table_from_csv(text)
        _render_table_rows(rows, fmt)
        return EXIT_OK
    delta2_list = DELTA2_GRID
    if args.delta2_list:
        delta2_list = tuple(float(x) for x in args.delta2_list.split(","))
    reports = table1(args.delta1, delta2_list, args.branching,
                     config=_optimizer_config(args), threads=_threads(args))
    if fmt == "json":
        print(reports_to_json(reports, command="table1",
                              delta1=float(args.delta1), seed=int(args.seed)),
              end="")
    elif fmt == "csv":
        print(table_to_csv(reports), end="")
    else:
        rows = [
            {"delta2": rep.delta2, "ks": rep.ks, "fk": rep.fk,
             "martin": rep.martin, "mp": rep.mp}
            for rep in reports
        ]
        _render_table_rows(rows, fmt)
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _cmd_verify(args) -> int:
    fmt = args.format or "json"
    if args.channel is None and args.family is None:
        report = run_suite(seed=args.seed, count=args.count)
        report["command"] = "verify"
        report["suite"] = args.suite
        if not args.verbose:
            report.pop("instances")
        print(_json_text(report) if fmt == "json" else _suite_table(report))
        return EXIT_OK if report["ok"] else EXIT_TOLERANCE
    channel = _resolve_channel(args)
    if args.tree is None or args.depth is None:
        raise ChannelError("instance verification needs --tree and --depth")
    spec = _parse_tree(args.tree, args.depth)
    tree = sample_tree(spec, args.seed)
    checks: dict = {}
    ok = True
    want = args.suite
    if want in ("lemma1", "all"):
        diff = check_lemma1(tree, channel, 0)
        checks["lemma1_diff"] = diff
        ok = ok and diff <= LEMMA1_TOL
    if want in ("recursion", "all"):
        rec = check_main_recursion(tree, channel, 0)
        checks["recursion_diff"] = rec.abs_diff
        checks["pointwise_violations"] = rec.pointwise_violations
        checks["max_pointwise_gap"] = rec.max_pointwise_gap
        ok = ok and rec.abs_diff <= RECURSION_TOL
    if want in ("propagation", "all"):
        diff = check_propagation(tree, channel, 0)
        checks["propagation_diff"] = diff
        ok = ok and diff <= PROPAGATION_TOL
    if want in ("lyapunov", "all"):
        margin = check_lyapunov_bound(tree, channel, 0,
                                      config=_optimizer_config(args),
                                      threads=_threads(args))
        checks["lyapunov_margin"] = margin
        ok = ok and margin >= -LYAPUNOV_MARGIN_TOL
    if want == "all":
        diff = bayes_vs_recursion(tree, channel)
        checks["bayes_diff"] = diff
        ok = ok and diff <= BAYES_TOL
    report = {
        "command": "verify",
        "suite": want,
        "channel": channel_to_json(channel),
        "tree": args.tree,
        "depth": int(args.depth),
        "seed": int(args.seed),
        "checks": checks,
        "ok": bool(ok),
    }
    if fmt == "json":
        print(_json_text(report))
    else:
        for key, value in checks.items():
            print(f"{key} = {value}")
        print(f"ok = {str(report['ok']).lower()}")
    return EXIT_OK if ok else EXIT_TOLERANCE


def _suite_table(report: dict) -> str:
    keys = ("max_recursion_diff", "max_lemma1_diff", "max_propagation_diff",
            "max_bayes_diff", "max_enumeration_diff", "witness_instances")
    lines = [f"instances = {report['count']}  seed = {report['seed']}"]
    lines += [f"{k} = {report[k]}" for k in keys]
    lines.append(f"ok = {str(report['ok']).lower()}")
    return "\n".join(lines)


# ---------------------------------------------------------------- simulate


def _sweep_report(args, channel, estimates) -> dict:
    return {
        "command": "simulate",
        "channel": channel_to_json(channel),
        "tree": args.tree,
        "mode": args.mode,
        "samples": int(args.samples),
        "seed": int(args.seed),
        "results": [
            {"depth": e.depth, "mean_L": e.mean, "stderr": e.stderr,
             "samples": e.samples}
            for e in estimates
        ],
    }


def _sweep_csv(results: list[dict]) -> str:
    lines = ["depth,mean_L,stderr,samples"]
    for r in results:
        lines.append(f"{r['depth']},{r['mean_L']!r},{r['stderr']!r},{r['samples']}")
    return "\n".join(lines) + "\n"


def _sweep_rows_from_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "depth,mean_L,stderr,samples":
        raise ValueError("expected header 'depth,mean_L,stderr,samples'")
    rows = []
    for ln in lines[1:]:
        depth, mean, stderr, samples = ln.split(",")
        rows.append({"depth": int(depth), "mean_L": float(mean),
                     "stderr": float(stderr), "samples": int(samples)})
    return rows


def _render_sweep(report_or_rows, fmt: str) -> None:
    if isinstance(report_or_rows, dict):
        rows = report_or_rows["results"]
        obj = report_or_rows
    else:
        rows = report_or_rows
        obj = {"command": "simulate", "results": rows}
    if fmt == "json":
        print(_json_text(obj))
    elif fmt == "csv":
        print(_sweep_csv(rows), end="")
    else:
        print(f"{'depth':>5}  {'mean_L':>12}  {'stderr':>12}  {'samples':>8}")
        for r in rows:
            print(f"{r['depth']:>5}  {r['mean_L']:12.6g}  {r['stderr']:12.6g}"
                  f"  {r['samples']:>8}")


def _cmd_simulate(args) -> int:
    fmt = args.format or "json"
    if args.from_file:
        with open(args.from_file, "r", encoding="utf-8") as handle:
            text = handle.read()
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
            if "results" not in obj:
                raise ValueError("simulation JSON needs a 'results' list")
            _render_sweep(obj, fmt)
        else:
            _render_sweep(_sweep_rows_from_csv(text), fmt)
        return EXIT_OK
    channel = _resolve_channel(args)
    if args.tree is None:
        raise ChannelError("simulate needs --tree")
    if args.depth_sweep:
        depths = _parse_sweep(args.depth_sweep)
    elif args.depth is not None:
        depths = [args.depth]
    else:
        raise ChannelError("simulate needs --depth or --depth-sweep")
    spec = _parse_tree(args.tree, depths[0])
    estimates = depth_sweep(spec, channel, depths, args.samples, args.seed,
                            mode=args.mode, threads=_threads(args),
                            max_nodes=args.max_nodes)
    _render_sweep(_sweep_report(args, channel, estimates), fmt)
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="tree-recon",
                     description="Non-reconstruction constants and broadcast "
                                 "simulations for Markov channels on trees.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("c-of-m", help="variational constant c(M) of a channel")
    _add_channel_args(p)
    _add_optimizer_args(p)
    _add_common_args(p)
    p.set_defaults(func=_cmd_c_of_m)

    p = sub.add_parser("bounds", help="bound constants and verdicts at a "
                                      "branching number")
    _add_channel_args(p)
    _add_optimizer_args(p)
    _add_common_args(p)
    p.add_argument("--branching", type=float, default=None,
                   help="branching number d for verdicts")
    p.add_argument("--from-file", metavar="PATH",
                   help="re-render a previously emitted report")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("table1", help="bound table for two-state channels "
                                      "over a delta2 grid")
    _add_optimizer_args(p)
    _add_common_args(p)
    p.add_argument("--delta1", type=float, default=0.3)
    p.add_argument("--delta2-list", metavar="P1,P2,...",
                   help="comma-separated delta2 values (default: standard grid)")
    p.add_argument("--branching", type=float, default=None)
    p.add_argument("--from-file", metavar="PATH")
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("verify", help="exact identity checks on small trees")
    _add_channel_args(p)
    _add_optimizer_args(p)
    _add_common_args(p)
    p.add_argument("--suite",
                   choices=("lemma1", "recursion", "propagation", "lyapunov",
                            "all"),
                   default="all")
    p.add_argument("--tree", help="instance tree, e.g. regular:d=2")
    p.add_argument("--depth", type=int)
    p.add_argument("--count", type=int, default=50,
                   help="instances in the randomized suite")
    p.add_argument("--verbose", action="store_true",
                   help="include per-instance rows in the suite report")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo root-entropy decay")
    _add_channel_args(p)
    _add_common_args(p)
    p.add_argument("--tree", help="regular:d=<int> or gw:pmf=p1,p2,...")
    p.add_argument("--depth", type=int)
    p.add_argument("--depth-sweep", metavar="A..B")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("annealed", "quenched"),
                   default="annealed")
    p.add_argument("--max-nodes", type=int, default=1_000_000)
    p.add_argument("--from-file", metavar="PATH")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NoConvergence, NumericalUnderflow) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


def entry() -> None:
    sys.exit(main())
