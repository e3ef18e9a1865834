"""Command-line front end: build, eval, experiment, bound.

Flags may also come from a flat `key = value` config file given with
--config; explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from gnet import bounds, builder, harness
from gnet.kernels import make_kernel
from gnet.measures import load_measure


def _read_config(path) -> dict:
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SystemExit(f"bad config line (expected key = value): {line!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _merge_config(args: argparse.Namespace, parser_defaults: dict) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    file_vals = _read_config(args.config)
    for key, raw in file_vals.items():
        if not hasattr(args, key):
            continue
        # A flag left at its parser default is overridden by the file value.
        if getattr(args, key) != parser_defaults.get(key):
            continue
        current = parser_defaults.get(key)
        if isinstance(current, bool):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(args, key, int(raw))
        elif isinstance(current, float):
            setattr(args, key, float(raw))
        else:
            setattr(args, key, raw)
    return args


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file mirroring the flags")
    p.add_argument("--seed", type=int, default=0)


def _kernel_from_args(args) -> "make_kernel":
    return make_kernel(args.kernel, args.gamma, args.q, args.Q)


def _cmd_build(args) -> int:
    kernel = _kernel_from_args(args)
    tau = load_measure(args.tau, kernel.y_space)
    config = builder.BuildConfig(
        n_budget=args.n,
        degree=args.degree,
        trials=args.trials,
        seed=args.seed,
        eval_count=args.eval_count,
        eval_eps=args.eval_eps,
        kappa=args.kappa,
    )
    result = builder.search_best(tau, kernel, config)
    result.network.n_budget = args.n
    builder.save_network(result.network, args.out)
    print(f"wrote {args.out}: {result.network.n_terms} terms, budget {args.n}")
    print(
        f"sup error {result.error:.6g} over {result.eval_size} eval points "
        f"(off-net slack {result.off_net_slack:.3g})"
    )
    print(f"partition: {result.n_cells} cells at radius {result.eps:.4g}")
    for w in result.warnings:
        print(f"warning: {w}")
    return 0


def _cmd_eval(args) -> int:
    net = builder.load_network(args.net)
    tau = load_measure(args.tau, net.kernel.y_space)
    eval_pts = builder.build_eval_net(net.kernel, args.seed, args.eval_count, args.eval_eps)
    err, arg = builder.sup_error(net, tau, net.kernel, eval_pts)
    slack = 2.0 * net.kernel.holder_bound(1.0) * args.eval_eps**net.kernel.alpha
    print(f"sup error {err:.6g} over {eval_pts.shape[0]} eval points")
    print(f"off-net slack {slack:.6g}")
    print("argmax " + " ".join(repr(float(c)) for c in arg))
    return 0


def _cmd_experiment(args) -> int:
    overrides = {"seed": args.seed, "trials": args.trials, "measure_time": not args.no_timing}
    if args.atoms is not None:
        overrides["n_atoms"] = args.atoms
    if args.n_list is not None:
        overrides["n_list"] = tuple(int(t) for t in args.n_list.split(","))
    if args.eval_count is not None:
        overrides["eval_count"] = args.eval_count
    if args.kappa is not None:
        overrides["kappa_bound"] = args.kappa
    config = harness.preset_config(args.preset, **overrides)
    report = harness.run_experiment(config, out_path=args.out)
    print(report.text())
    if args.out:
        print(f"wrote {args.out}")
    return 0


def _cmd_bound(args) -> int:
    kernel = _kernel_from_args(args)
    report = bounds.bound_kernel(kernel, args.n, kappa=args.kappa, xi_tau=args.xi)
    print(report.text(n_list=[args.n]))
    print(report.machine_row(args.n))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a network from a measure file")
    p_build.add_argument("--kernel", default="laplace", choices=["relu-pow", "zonal-pow", "laplace"])
    p_build.add_argument("--gamma", type=float, default=1.0)
    p_build.add_argument("--q", type=int, default=2)
    p_build.add_argument("--Q", type=int, default=2)
    p_build.add_argument("--n", type=int, default=256)
    p_build.add_argument("--trials", type=int, default=8)
    p_build.add_argument("--tau", required=True, help="measure file: `w c1 ... c_amb` per line")
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--degree", type=float, default=None)
    p_build.add_argument("--eval-count", type=int, default=10_000, dest="eval_count")
    p_build.add_argument("--eval-eps", type=float, default=0.0, dest="eval_eps")
    p_build.add_argument("--kappa", type=float, default=None)
    _add_common(p_build)
    p_build.set_defaults(func=_cmd_build)

    p_eval = sub.add_parser("eval", help="evaluate a saved network against a measure")
    p_eval.add_argument("--net", required=True)
    p_eval.add_argument("--tau", required=True)
    p_eval.add_argument("--eval-count", type=int, default=10_000, dest="eval_count")
    p_eval.add_argument("--eval-eps", type=float, default=0.0, dest="eval_eps")
    _add_common(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_exp = sub.add_parser("experiment", help="run a preset and emit a rates CSV")
    p_exp.add_argument("--preset", required=True, choices=sorted(harness.PRESETS))
    p_exp.add_argument("--out", default=None)
    p_exp.add_argument("--trials", type=int, default=8)
    p_exp.add_argument("--atoms", type=int, default=None)
    p_exp.add_argument("--n-list", default=None, dest="n_list", help="comma-separated budgets")
    p_exp.add_argument("--eval-count", type=int, default=None, dest="eval_count")
    p_exp.add_argument("--kappa", type=float, default=None)
    p_exp.add_argument("--no-timing", action="store_true", dest="no_timing",
                       help="zero the wall_ms column for byte-reproducible CSVs")
    _add_common(p_exp)
    p_exp.set_defaults(func=_cmd_experiment)

    p_bound = sub.add_parser("bound", help="print the closed-form bound for a kernel")
    p_bound.add_argument("--kernel", default="laplace", choices=["relu-pow", "zonal-pow", "laplace"])
    p_bound.add_argument("--gamma", type=float, default=1.0)
    p_bound.add_argument("--q", type=int, default=2)
    p_bound.add_argument("--Q", type=int, default=2)
    p_bound.add_argument("--n", type=int, default=256)
    p_bound.add_argument("--kappa", type=float, default=1.0)
    p_bound.add_argument("--xi", type=float, default=1.0)
    _add_common(p_bound)
    p_bound.set_defaults(func=_cmd_bound)

    args = parser.parse_args(argv)
    defaults = {
        key: parser.get_default(key)
        for key in vars(args)
    }
    for name, p in (("build", p_build), ("eval", p_eval), ("experiment", p_exp), ("bound", p_bound)):
        if args.command == name:
            defaults.update({k: p.get_default(k) for k in vars(args)})
    args = _merge_config(args, defaults)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
