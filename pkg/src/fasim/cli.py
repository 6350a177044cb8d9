"""Command-line driver: ``fasim simulate|compare|bench|translate``.

Output files go to ``--out``/``--out-dir`` when given, else to the
directory named by the ``FASIM_OUTPUT_DIR`` environment variable, else to
the current directory.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from sklearn.base import clone
from sklearn.model_selection import ParameterGrid

from .errors import FASimError
from .estimators import FASimulator, ReferenceSimulator
from .metrics import compare
from .modelfile import load_model
from .translate import convert_to_fa, dump_tables

OUTPUT_ENV = "FASIM_OUTPUT_DIR"

ANGLE_GRID = (math.pi / 10, math.pi / 50, math.pi / 100, math.pi / 150)
ERROR_GRID = (1e-6, 1e-4, 1e-2)
DT_GRID = (0.1, 0.01, 0.001)
REFERENCE_DT = 1e-4
ANGLE_LABELS = {a: f"pi/{round(math.pi / a)}" for a in ANGLE_GRID}


def _out_dir(arg):
    d = Path(arg or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _angle(text):
    """Accept plain numbers or ``pi/N``."""
    t = text.strip().replace(" ", "")
    if t.startswith("pi/"):
        return math.pi / float(t[3:])
    return float(t)


def _summary_line(name, engine, report, trace):
    first = trace.first_switch()
    sw = f"{first.time:.9g}" if first else "none"
    return (
        f"{name} [{engine}] intra_steps={report.intra_steps} switches={report.switch_count} "
        f"first_switch={sw} wall={report.wall_time:.4g}s"
    )


def cmd_simulate(args):
    mf = load_model(args.model)
    if args.engine == "fa":
        est = FASimulator(max_angle=args.max_angle, error_bound=args.err, t_max=args.tmax, rng_seed=args.seed)
    else:
        est = ReferenceSimulator(
            dt=args.dt,
            t_max=args.tmax,
            rng_seed=args.seed,
            crossing_refinement="bisection" if args.engine == "ref" else "none",
        )
    est.fit(mf)
    out = Path(args.out) if args.out else _out_dir(None) / f"{mf.name}_{args.engine}.csv"
    est.trace_.to_csv(out)
    print(_summary_line(mf.name, args.engine, est.report_, est.trace_))
    for d in est.report_.diagnostics:
        print(f"warning: {d}", file=sys.stderr)
    print(f"trace written to {out}")
    return 0


def _compare_row(name, label, est, ref, outputs, grid):
    res = compare(est.report_, est.trace_, ref.report_, ref.trace_, outputs, grid)
    row = {
        "model": name,
        "engine": label,
        "intra_steps": est.report_.intra_steps,
        "switches": est.report_.switch_count,
        "wall_time": est.report_.wall_time,
        "step_ratio": res.step_ratio,
        "first_switch_delta": res.switch_time_deltas[0] if res.switch_time_deltas else None,
    }
    for o, c in res.correlation.items():
        row[f"corr[{o}]"] = c
    return row


def _write_rows(rows, path):
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r[k]) for k in keys})


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _print_table(rows):
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    cells = [[_fmt(r.get(k)) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    print("  ".join(k.ljust(w) for k, w in zip(keys, widths)))
    for c in cells:
        print("  ".join(x.ljust(w) for x, w in zip(c, widths)))


def cmd_compare(args):
    mf = load_model(args.model)
    outputs = mf.outputs or mf.ha.variables
    fa = FASimulator(max_angle=args.max_angle, error_bound=args.err, t_max=args.tmax, rng_seed=args.seed).fit(mf)
    ref = ReferenceSimulator(dt=args.dt, t_max=args.tmax, rng_seed=args.seed).fit(mf)
    d = _out_dir(args.out_dir)
    fa.trace_.to_csv(d / f"{mf.name}_fa.csv")
    ref.trace_.to_csv(d / f"{mf.name}_ref.csv")
    row = _compare_row(mf.name, "fa", fa, ref, outputs, args.grid)
    _write_rows([row], d / f"{mf.name}_summary.csv")
    print(_summary_line(mf.name, "fa", fa.report_, fa.trace_))
    print(_summary_line(mf.name, "ref", ref.report_, ref.trace_))
    _print_table([row])
    return 0


def _bench_model(name, grid_dt):
    mf = load_model(name)
    outputs = mf.outputs or mf.ha.variables
    ref = ReferenceSimulator(dt=REFERENCE_DT).fit(mf)
    rows = []
    base = FASimulator()
    for params in ParameterGrid({"max_angle": ANGLE_GRID, "error_bound": ERROR_GRID}):
        est = clone(base).set_params(**params).fit(mf)
        label = f"FA({ANGLE_LABELS[params['max_angle']]}, {params['error_bound']:g})"
        rows.append(_compare_row(mf.name, label, est, ref, outputs, grid_dt))
    for dt in DT_GRID:
        est = ReferenceSimulator(dt=dt).fit(mf)
        rows.append(_compare_row(mf.name, f"RK4({dt:g})", est, ref, outputs, grid_dt))
    return rows


def cmd_bench(args):
    names = args.models or ["steering", "robot", "water"]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_bench_model, names, [args.grid] * len(names)))
    else:
        results = [_bench_model(n, args.grid) for n in names]
    rows = [r for res in results for r in res]
    path = _out_dir(args.out_dir) / "bench_summary.csv"
    _write_rows(rows, path)
    _print_table(rows)
    print(f"summary written to {path}")
    return 0


def cmd_translate(args):
    mf = load_model(args.model)
    fa = convert_to_fa(mf.ha)
    if args.dump:
        print(dump_tables(fa))
    else:
        print(
            f"{mf.name}: {len(fa.locations)} locations, {len(fa.edges)} edges, "
            f"{len(fa.targets)} guard targets, {len(fa.residual_edges)} residual-tracked edges"
        )
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="fasim", description="Hybrid automaton simulation by angular stepping.")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(sp):
        sp.add_argument("model", help="model file path or built-in name (steering, robot, water)")
        sp.add_argument("--max-angle", type=_angle, default=math.pi / 10, help="max rotation per step, e.g. pi/10")
        sp.add_argument("--err", type=float, default=1e-6, help="error bound for step halving")
        sp.add_argument("--tmax", type=float, default=None, help="horizon (default: model's tmax)")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("simulate", help="run one engine and write the trace CSV")
    model_args(s)
    s.add_argument("--engine", choices=("fa", "ref", "naive"), default="fa")
    s.add_argument("--dt", type=float, default=REFERENCE_DT, help="step of the ref/naive engines")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="run the FA and reference engines and summarize")
    model_args(c)
    c.add_argument("--dt", type=float, default=REFERENCE_DT)
    c.add_argument("--grid", type=float, default=0.01, help="resampling grid for correlation")
    c.add_argument("--out-dir", default=None)
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="sweep the built-in benchmarks over the parameter grid")
    b.add_argument("--models", nargs="*", default=None)
    b.add_argument("--grid", type=float, default=0.01)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out-dir", default=None)
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("translate", help="show the frequency-domain tables of a model")
    t.add_argument("model")
    t.add_argument("--dump", action="store_true", help="print normalization and guard-angle tables")
    t.set_defaults(func=cmd_translate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FASimError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
