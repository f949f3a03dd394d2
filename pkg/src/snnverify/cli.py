"""Command-line entry point.

Subcommands: convert, simulate, mse, encode, solve, verify, tighten,
search, trace.  Every subcommand accepts ``--config FILE`` with
``key = value`` lines; explicit flags win over config values, which win
over built-in defaults.  Exit codes: 64 usage, 65 malformed input data,
74 file I/O; verification-style outcomes map to 0 (safe / feasible /
found), 1 (unsafe / infeasible / not found), 2 (unknown / timeout).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import milp
from .convert import ann_to_snn, compute_t_up
from .encode import encode_lb_query, encode_snn, encode_ub_query
from .model import (
    SnnVerifyError,
    VerdictKind,
    load_box,
    load_network,
    load_ranges,
    load_snn,
    save_ranges,
    save_snn,
    strip_biases,
)
from .report import (
    emit_plot_data,
    render_bounds_figure,
    render_tighten_figure,
    write_search_csv,
    write_tighten_log,
)
from .search import FOUND, FOUND_RELAXED, NOT_FOUND, SearchConfig, find_numsteps
from .sim import format_trace, mse as compute_mse, sample_inputs, snn_run
from .tighten import TightenConfig, snn_bounds
from .verify import verify as run_verify

EX_USAGE = 64
EX_DATA = 65
EX_IOERR = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2)
        raise UsageError(message)


def _parse_config(path: str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, val = parts
        key = key.strip().replace("-", "_")
        val = val.strip()
        try:
            values[key] = json.loads(val)
        except json.JSONDecodeError:
            values[key] = val
    return values


def _require(args, *attrs):
    for attr in attrs:
        if getattr(args, attr, None) is None:
            flag = attr.removesuffix("_file").replace("_", "-")
            raise UsageError(f"missing required option --{flag}")


def _parse_input_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(";", ",").split(",") if v.strip()])
    except ValueError as exc:
        raise UsageError(f"cannot parse input vector {text!r}") from exc


def _load_snn_arg(args):
    snn = load_snn(args.snn)
    if getattr(args, "ignore_biases", False):
        snn = strip_biases(snn)
    return snn


def _common_io(p: _Parser):
    p.add_argument("--config", help="key = value defaults file; flags win")


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="snnverify", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command")
    sp: dict[str, _Parser] = {}

    def sub(name: str, help_text: str) -> _Parser:
        s = subs.add_parser(name, help=help_text)
        sp[name] = s
        _common_io(s)
        return s

    s = sub("convert", "translate a ReLU network file into a spiking one")
    s.add_argument("--ann", help="ReLU network file")
    s.add_argument("--out", help="spiking network file to write")
    s.add_argument("--theta", type=float, default=1.0, help="hidden threshold (default 1)")
    s.add_argument("--leak", type=float, default=1.0, help="leak factor (default 1)")

    s = sub("simulate", "run a spiking network on one input and show the trace")
    s.add_argument("--snn")
    s.add_argument("--input", help="comma-separated input vector, e.g. '5,2'")
    s.add_argument("--steps", type=int)
    s.add_argument("--trace-out", help="also write the tab-separated trace here")
    s.add_argument("--ignore-biases", action="store_true")

    s = sub("trace", "dump the tab-separated trace of one run")
    s.add_argument("--snn")
    s.add_argument("--input")
    s.add_argument("--steps", type=int)
    s.add_argument("--out", help="output file (default stdout)")
    s.add_argument("--ignore-biases", action="store_true")

    s = sub("mse", "per-output mean squared error between a network pair")
    s.add_argument("--ann")
    s.add_argument("--snn")
    s.add_argument("--box")
    s.add_argument("--steps", type=int)
    s.add_argument("--samples", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--ignore-biases", action="store_true")

    s = sub("encode", "compile a run into a MILP, optionally with range queries")
    s.add_argument("--snn")
    s.add_argument("--steps", type=int)
    s.add_argument("--box")
    s.add_argument("--range", dest="range_file")
    s.add_argument("--query", choices=["ub", "lb", "both"], help="append range queries")
    s.add_argument("--query-output", type=int, help="single-output query index (default: disjunctive)")
    s.add_argument("--export-lp", help="write the model in LP format")
    s.add_argument("--epsilon", type=float, default=1e-6, help="floor strictness constant")
    s.add_argument("--global-big-m", action="store_true", help="one shared big-M value")
    s.add_argument("--ignore-biases", action="store_true")

    s = sub("solve", "solve an LP-format model, or validate a solution file")
    s.add_argument("--lp")
    s.add_argument("--budget", type=float, help="solver time budget in seconds")
    s.add_argument("--out", help="write the solution file here when feasible")
    s.add_argument("--import-solution", help="validate this solution file instead of solving")

    s = sub("verify", "simulation-then-formal safe-range check")
    s.add_argument("--snn")
    s.add_argument("--steps", type=int)
    s.add_argument("--box")
    s.add_argument("--range", dest="range_file")
    s.add_argument("--sim-samples", type=int, default=500)
    s.add_argument("--budget", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--cex-out", help="write a violating input vector here if one is found")
    s.add_argument("--ignore-biases", action="store_true")

    s = sub("tighten", "tighten violated output bounds to delta-width brackets")
    s.add_argument("--snn")
    s.add_argument("--steps", type=int)
    s.add_argument("--box")
    s.add_argument("--range", dest="range_file")
    s.add_argument("--k", "--K", type=int, default=5, help="expansion iteration bound")
    s.add_argument("--beta", type=float, default=0.01, help="expansion step")
    s.add_argument("--delta", type=float, default=0.001, help="bracket tightness")
    s.add_argument("--budget", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--probe-samples", type=int, default=500)
    s.add_argument("--out", help="write the tightened range file here")
    s.add_argument("--log", help="write the per-iteration log CSV here")
    s.add_argument("--plot-data", help="write the given/tightened bounds CSV here")
    s.add_argument("--plot", help="render the iteration figure here")
    s.add_argument("--ignore-biases", action="store_true")

    s = sub("search", "find the smallest window meeting accuracy and safe range")
    s.add_argument("--ann")
    s.add_argument("--theta", type=float, default=1.0)
    s.add_argument("--leak", type=float, default=1.0)
    s.add_argument("--box")
    s.add_argument("--range", dest="range_file")
    s.add_argument("--eps", type=float, help="per-output MSE gate")
    s.add_argument("--t-up", type=int, help="window upper bound")
    s.add_argument("--period", type=float, help="control period (with --step-time, sets --t-up)")
    s.add_argument("--step-time", type=float, help="single-step execution time")
    s.add_argument("--margin", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mse-samples", type=int, default=5000)
    s.add_argument("--sim-samples", type=int, default=500)
    s.add_argument("--budget", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--k", "--K", type=int, default=5)
    s.add_argument("--beta", type=float, default=0.01)
    s.add_argument("--delta", type=float, default=0.001)
    s.add_argument("--report", help="write the per-T report CSV here")
    s.add_argument("--plot-data", help="write the bounds CSV here")
    s.add_argument("--plot", help="render the bounds figure here")
    s.add_argument("--ignore-biases", action="store_true")

    return parser, sp


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_convert(args) -> int:
    _require(args, "ann", "out")
    ann = load_network(args.ann)
    snn = ann_to_snn(ann, theta=args.theta, leak=args.leak)
    save_snn(snn, args.out)
    print(f"wrote {args.out}: layers {list(snn.layer_sizes)}, theta {args.theta}, leak {args.leak}")
    return 0


def _cmd_simulate(args) -> int:
    _require(args, "snn", "input", "steps")
    snn = _load_snn_arg(args)
    x = _parse_input_vector(args.input)
    trace = snn_run(snn, x, args.steps)
    n_hidden = sum(snn.hidden_sizes)
    gids = list(range(snn.n_inputs, snn.n_inputs + n_hidden))
    out_gids = list(range(snn.n_inputs + n_hidden, snn.n_inputs + n_hidden + snn.n_outputs))
    print("stored potential = leak*membrane + instant, before the spike reset")
    header = ["t"] + [f"pot N{g}" for g in gids] + [f"spk N{g}" for g in gids]
    header += [f"out N{g}" for g in out_gids] + [f"avg N{g}" for g in out_gids]
    print("  ".join(f"{h:>9}" for h in header))
    for t in range(1, args.steps + 1):
        cells = [f"{t:>9}"]
        for k in range(len(snn.hidden_sizes)):
            for i in range(snn.hidden_sizes[k]):
                cells.append(f"{trace.drive[k][t - 1, i]:>9.6g}")
        for k in range(len(snn.hidden_sizes)):
            for i in range(snn.hidden_sizes[k]):
                cells.append(f"{trace.spikes[k][t - 1, i]:>9.6g}")
        for i in range(snn.n_outputs):
            cells.append(f"{trace.out_instant[t - 1, i]:>9.6g}")
        for i in range(snn.n_outputs):
            cells.append(f"{trace.out_avg[t - 1, i]:>9.6g}")
        print("  ".join(cells))
    if snn.n_outputs == 1:
        avgs = ", ".join(f"{v:.6g}" for v in trace.out_avg[:, 0])
        print(f"running averages: <{avgs}>")
    print("outputs:", ", ".join(f"{v:.9g}" for v in trace.outputs()))
    if args.trace_out:
        Path(args.trace_out).write_text(format_trace(trace))
        print(f"trace written to {args.trace_out}")
    return 0


def _cmd_trace(args) -> int:
    _require(args, "snn", "input", "steps")
    snn = _load_snn_arg(args)
    trace = snn_run(snn, _parse_input_vector(args.input), args.steps)
    text = format_trace(trace)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_mse(args) -> int:
    _require(args, "ann", "snn", "box", "steps")
    ann = load_network(args.ann)
    snn = _load_snn_arg(args)
    if args.ignore_biases:
        ann = strip_biases(ann)
    box = load_box(args.box, ann.n_inputs)
    ds = sample_inputs(box, args.samples, args.seed)
    errs = compute_mse(ds, ann, snn, args.steps)
    for i, e in enumerate(errs):
        print(f"mse output {i}: {e:.9g}")
    return 0


def _cmd_encode(args) -> int:
    _require(args, "snn", "steps", "box")
    snn = _load_snn_arg(args)
    box = load_box(args.box, snn.n_inputs)
    enc = encode_snn(
        snn, args.steps, box,
        epsilon=args.epsilon, global_big_m=args.global_big_m,
    )
    print(
        f"encoded {args.steps} steps: {len(enc.model.variables)} variables, "
        f"{len(enc.model.constraints)} constraints, max big-M {enc.table.max_big_m():.6g}"
    )
    models = [("", enc.model)]
    if args.query:
        _require(args, "range_file")
        spec = load_ranges(args.range_file, snn.n_outputs)
        out = args.query_output
        models = []
        if args.query in ("ub", "both"):
            models.append((".ub", encode_ub_query(enc, spec.upper, out)))
        if args.query in ("lb", "both"):
            models.append((".lb", encode_lb_query(enc, spec.lower, out)))
    if args.export_lp:
        base = Path(args.export_lp)
        for suffix, model in models:
            path = base if (len(models) == 1) else base.with_suffix(suffix + base.suffix)
            milp.export_lp(model, path)
            print(f"wrote {path}")
    return 0


def _cmd_solve(args) -> int:
    _require(args, "lp")
    model = milp.read_lp(args.lp)
    if args.import_solution:
        result = milp.import_solution(model, args.import_solution)
        if result.is_feasible:
            print("solution is feasible")
            if result.objective is not None:
                print(f"objective: {result.objective:.9g}")
            return 0
        print(f"solution is infeasible: {result.detail}")
        return 1
    result = milp.solve(model, args.budget)
    print(
        f"status: {result.status.value} "
        f"(nodes {result.stats.nodes}, pivots {result.stats.pivots}, "
        f"{result.stats.wall_time:.3f}s)"
    )
    if result.is_feasible:
        if result.objective is not None:
            print(f"objective: {result.objective:.9g}")
        if args.out:
            milp.write_solution(model, result.assignment, args.out)
            print(f"solution written to {args.out}")
        return 0
    return 1 if result.status is milp.SolveStatus.INFEASIBLE else 2


def _cmd_verify(args) -> int:
    _require(args, "snn", "steps", "box", "range_file")
    snn = _load_snn_arg(args)
    box = load_box(args.box, snn.n_inputs)
    spec = load_ranges(args.range_file, snn.n_outputs)
    ds = sample_inputs(box, args.sim_samples, args.seed)
    verdict = run_verify(snn, args.steps, ds, box, spec, args.budget, jobs=args.jobs)
    print(f"verdict: {verdict.kind.value}" + (f" ({verdict.provenance.value})" if verdict.provenance else ""))
    if verdict.is_unsafe:
        cex = verdict.counterexample
        print(f"violated output {cex.index} ({cex.side} bound {cex.bound:.9g})")
        print("input:", ", ".join(f"{v:.9g}" for v in cex.input))
        print("outputs:", ", ".join(f"{v:.9g}" for v in cex.outputs))
        if args.cex_out:
            Path(args.cex_out).write_text(json.dumps(list(cex.input)) + "\n")
            print(f"counterexample written to {args.cex_out}")
        return 1
    if verdict.kind is VerdictKind.UNKNOWN:
        print(f"detail: {verdict.detail}")
        return 2
    return 0


def _cmd_tighten(args) -> int:
    _require(args, "snn", "steps", "box", "range_file")
    snn = _load_snn_arg(args)
    box = load_box(args.box, snn.n_inputs)
    spec = load_ranges(args.range_file, snn.n_outputs)
    probe = sample_inputs(box, args.probe_samples, args.seed)
    cfg = TightenConfig(
        expansion_steps=args.k, beta=args.beta, delta=args.delta,
        budget=args.budget, seed=args.seed, probe=probe,
    )
    tight = snn_bounds(snn, args.steps, box, spec, cfg)
    for i in range(snn.n_outputs):
        marks = []
        for side in ("lower", "upper"):
            res = tight.sides.get((i, side))
            if res is not None:
                marks.append(f"{side} {'tightened' if res.verified else 'UNVERIFIED'}")
        status = "; ".join(marks) if marks else "unchanged"
        print(
            f"output {i}: [{tight.range.lower[i]:.9g}, {tight.range.upper[i]:.9g}] ({status})"
        )
    if args.out:
        save_ranges(tight.range, args.out)
        print(f"tightened range written to {args.out}")
    if args.plot_data:
        emit_plot_data(tight, args.plot_data, steps=args.steps, given=spec)
        print(f"plot data written to {args.plot_data}")
    events = tight.events()
    if args.log and events:
        write_tighten_log(events, args.log)
        print(f"iteration log written to {args.log}")
    if args.plot and events:
        render_tighten_figure(events, args.plot)
        print(f"figure written to {args.plot}")
    return 0


def _cmd_search(args) -> int:
    _require(args, "ann", "box", "range_file", "eps")
    if args.t_up is None:
        if args.period is None or args.step_time is None:
            raise UsageError("need --t-up, or --period with --step-time")
        args.t_up = compute_t_up(args.period, args.step_time)
        print(f"window upper bound from control period: {args.t_up}")
    ann = load_network(args.ann)
    if args.ignore_biases:
        ann = strip_biases(ann)
    snn = ann_to_snn(ann, theta=args.theta, leak=args.leak)
    box = load_box(args.box, ann.n_inputs)
    spec = load_ranges(args.range_file, ann.n_outputs)
    cfg = SearchConfig(
        eps=args.eps, t_up=args.t_up,
        mse_samples=args.mse_samples, sim_samples=args.sim_samples,
        margin=args.margin, budget=args.budget, seed=args.seed, jobs=args.jobs,
        tighten=TightenConfig(
            expansion_steps=args.k, beta=args.beta, delta=args.delta,
            budget=args.budget, seed=args.seed,
        ),
    )
    report = find_numsteps(ann, snn, args.eps, box, spec, args.t_up, cfg)
    for rec in report.records:
        mse_cell = ", ".join(f"{v:.5f}" for v in rec.mse)
        verdict = rec.verdict.kind.value if rec.verdict else "-"
        print(f"T={rec.steps}: mse {mse_cell}  verdict {verdict}  ({rec.wall_time:.3f}s)")
    if report.outcome.kind == FOUND:
        print(f"smallest admissible window: T = {report.outcome.steps}")
    elif report.outcome.kind == FOUND_RELAXED:
        r = report.outcome.range
        cells = "; ".join(f"[{l:.9g}, {u:.9g}]" for l, u in zip(r.lower, r.upper))
        print(f"T = {report.outcome.steps} accepted with relaxed range {cells}")
    else:
        print(f"no admissible window up to T = {args.t_up}")
    if args.report:
        write_search_csv(report, args.report)
        print(f"report written to {args.report}")
    wrote_rows = any(r.gate_passed for r in report.records)
    if args.plot_data and wrote_rows:
        emit_plot_data(report, args.plot_data)
        print(f"plot data written to {args.plot_data}")
    if args.plot and wrote_rows:
        render_bounds_figure(report, args.plot)
        print(f"figure written to {args.plot}")
    return 0 if report.outcome.kind != NOT_FOUND else 1


_COMMANDS = {
    "convert": _cmd_convert,
    "simulate": _cmd_simulate,
    "trace": _cmd_trace,
    "mse": _cmd_mse,
    "encode": _cmd_encode,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "tighten": _cmd_tighten,
    "search": _cmd_search,
}


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        # config values become subparser defaults so explicit flags win
        if "--config" in argv:
            cfg_path = argv[argv.index("--config") + 1]
            command = next((a for a in argv if not a.startswith("-")), None)
            if command in subparsers:
                cfg = _parse_config(cfg_path)
                known = {a.dest for a in subparsers[command]._actions}
                subparsers[command].set_defaults(
                    **{k: v for k, v in cfg.items() if k in known}
                )
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return EX_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EX_IOERR
    except SnnVerifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_DATA


if __name__ == "__main__":
    sys.exit(main())
