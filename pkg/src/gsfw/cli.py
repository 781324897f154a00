"""Command line interface.

Exit codes: 0 success, 2 an invariant or certification check failed,
3 bad input (unreadable file, invalid parameter).
"""
import argparse
from dataclasses import replace
import math
import os
import sys

import numpy as np

from . import adversarial, experiments, theory
from .oracles import OracleKind, dmo_battery
from .solvers import IterateTrace

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_INPUT = 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _oracle_arg(text):
    try:
        return str(OracleKind.parse(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def cmd_recover(args):
    config = experiments.load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.max_iter is not None:
        changes["max_iter"] = args.max_iter
    if changes:
        config = replace(config, **changes)
    result = experiments.run_experiment(config, out=args.out, oracle=args.oracle, jobs=args.jobs)
    print("solver,n_ok,n_failed,median_h,iqr_h,median_err,iqr_err")
    for r in result.rows:
        print(f"{r.solver},{r.n_ok},{r.n_failed},{r.median_h:.6g},{r.iqr_h:.6g},"
              f"{r.median_err:.6g},{r.iqr_err:.6g}")
    for key, val in sorted(result.verdicts.items()):
        print(f"verdict {key}: {val}")
    for (index, name), err in sorted(result.errors.items()):
        print(f"failure trial {index} {name}: {err}", file=sys.stderr)
    return EXIT_VIOLATION if result.errors else EXIT_OK


def cmd_ksupport(args):
    deltas = [float(v) for v in args.deltas.split(",")]
    seeds = range(args.seed, args.seed + args.trials)
    res = experiments.ksupport_fig(seeds, deltas, T=args.max_iter, out=args.out)
    print("delta,median_final_f,median_final_h,median_grad_first,median_grad_last")
    for d in deltas:
        print(f"{d:g},{np.median(res.final_f[d]):.6g},{np.median(res.final_h[d]):.6g},"
              f"{np.median(res.grad_first[d]):.6g},{np.median(res.grad_last[d]):.6g}")
    decay = all(last < first for d in deltas
                for first, last in zip(res.grad_first[d], res.grad_last[d]))
    print(f"verdict gradient_decay_all_seeds: {decay}")
    if 1.0 in deltas and min(deltas) < 1.0:
        lo = min(deltas)
        print(f"verdict delta1_beats_delta{lo:g}: {res.wins(1.0, lo)}/{len(res.seeds)}")
    return EXIT_OK


def cmd_adversarial(args):
    taus = adversarial.tau_grid(args.points)
    rows = adversarial.certification_table(taus, args.width, args.height)
    print(f"# grid {args.width}x{args.height}, centre 2x2 block relabelled to nodes 0-3")
    print("tau,additive_violation,multiplicative_gbar,dmo_ratio,dmo_delta,ok")
    for r in rows:
        print(f"{r['tau']:.6f},{r['additive']:.12g},{r['multiplicative']:.12g},"
              f"{r['dmo_ratio']:.12g},{r['dmo_delta']:.12g},{r['ok']}")
    _, rep = adversarial.build_wide_instance(args.wide_tau)
    print(f"# 30-node instance at tau={args.wide_tau:g}")
    for key in ("optimal", "best_wrong", "xgrad", "A", "B", "best_wrong_ratio",
                "heuristic_ratio", "heuristic_guarantee"):
        print(f"{key}: {rep[key]:.12g}")
    b_ok = (abs(rep["optimal"] + 2.0) <= 1e-12
            and abs(rep["best_wrong"] + math.sqrt(3.0 + args.wide_tau ** 2)) <= 1e-12
            and rep["A"] > 0 > rep["B"])
    ok = all(r["ok"] for r in rows) and b_ok
    print(f"certified: {ok}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_bounds(args):
    if not os.path.exists(args.trace):
        raise InputError(f"trace file {args.trace!r} not found")
    trace = IterateTrace.from_csv(args.trace)
    h = trace.h
    if np.all(np.isnan(h)):
        if args.f_star is None:
            raise InputError("trace has no h column values; pass --f-star")
        h = trace.f - args.f_star
    h0 = args.h0 if args.h0 is not None else float(h[0])
    A = theory.adaptive_A(trace.xgrad, args.delta, args.L, args.C)
    p = theory.BoundParams(delta=args.delta, L=args.L, C=args.C, mu=args.mu, h0=max(h0, 0.0),
                           s=args.s, B=trace.grad_inf, nu=args.nu, Dstar=args.dstar, A=A)
    names, rows = theory.bounds_table(trace.t, h, p)
    names = names + ["practical_decaying", "practical_flat"]
    lines = [",".join(["t", "h"] + names)]
    for row in rows:
        t = row[0]
        row = row + [theory.bound_practical(t, p, True), theory.bound_practical(t, p, False)]
        lines.append(",".join([str(t)] + [format(v, ".17g") for v in row[1:]]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(f"# practical columns: {theory.PRACTICAL_LABEL}, c={theory.PRACTICAL_C:g}\n")
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_dmo_check(args):
    oracle = args.oracle or "heuristic"
    n, dmo_bad, ipo_bad = dmo_battery(args.trials, seed=args.seed, oracle=oracle,
                                      max_d=args.max_d)
    print(f"oracle={oracle} instances={n} dmo_violations={dmo_bad} ipo_violations={ipo_bad}")
    return EXIT_OK if dmo_bad == 0 and ipo_bad == 0 else EXIT_VIOLATION


def build_parser():
    parser = _Parser(prog="gsfw", description="Approximate Frank-Wolfe over graph-structured supports.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("recover", help="run a sensing experiment config or recipe")
    p.add_argument("--config", default="fig4-desk",
                   help=f"recipe name ({', '.join(sorted(experiments.RECIPES))}) or config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--oracle", type=_oracle_arg, help="override every solver's oracle")
    p.add_argument("--out", help="directory for traces, summary.csv and meta.txt")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("ksupport-fig", help="degraded cardinality oracle delta sweep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--deltas", default="1.0,0.5,0.3,0.1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ksupport)

    p = sub.add_parser("adversarial", help="certify the gap-LMO counterexamples")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--height", type=int, default=4)
    p.add_argument("--wide-tau", type=float, default=0.5)
    p.set_defaults(func=cmd_adversarial)

    p = sub.add_parser("bounds", help="rate bounds alongside an empirical trace")
    p.add_argument("--trace", required=True, help="trace CSV written by recover")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--mu", type=float)
    p.add_argument("--h0", type=float)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--dstar", type=float, default=0.0)
    p.add_argument("--f-star", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("dmo-check", help="oracle property battery against brute force")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", type=_oracle_arg)
    p.add_argument("--max-d", type=int, default=12)
    p.set_defaults(func=cmd_dmo_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, FileNotFoundError, OSError, KeyError) as exc:
        print(f"gsfw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
