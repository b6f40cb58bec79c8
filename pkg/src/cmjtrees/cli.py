"""Command-line interface: ``cmjtrees {solve,simulate,verify,oracle,fringe}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import analytic
from .experiments import estimate_nu_fringe, run_trials
from .generators import gen_discrete
from .independence import brute_force_independence, independence_profile
from .models import Model, ModelSpec, SizeMode, make_rng
from .simulate import SizeGuardExceeded, simulate_cmj
from .tree import write_birth_times, write_tree
from .volterra import solve_p_generic

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", required=True, choices=[m.value for m in Model])
    g.add_argument("--chi", type=float, default=1.0, help="PA: outdegree weight (default 1)")
    g.add_argument("--rho", type=float, default=1.0, help="PA: base weight (default 1)")
    g.add_argument("--root-rate", type=float, default=None, help="PA: root birth rate lambda")
    g.add_argument("--m", type=int, default=3, help="MARY: branching factor (default 3)")
    g.add_argument(
        "--size-mode", default=SizeMode.ALL.value, choices=[s.value for s in SizeMode], help="XBST weight"
    )


def _add_common(p: argparse.ArgumentParser, seed: bool = True, threads: bool = False) -> None:
    p.add_argument("--format", default="text", choices=("text", "json", "csv"))
    p.add_argument("--no-timing", action="store_true", help="omit the elapsed-time line")
    p.add_argument("--output-dir", default=None, help="directory for result files")
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if threads:
        p.add_argument("--threads", type=int, default=None, help="worker processes (overrides THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmjtrees", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute nu for a model")
    _add_model_args(p)
    _add_common(p, seed=False)
    p.add_argument("--generic", action="store_true", help="use the grid fixed-point solver")
    p.add_argument("--t-max", type=float, default=30.0, help="grid solver range (default 30)")
    p.add_argument("--step", type=float, default=1e-3, help="grid solver step (default 1e-3)")

    p = sub.add_parser("simulate", help="grow one tree and summarise its independence profile")
    _add_model_args(p)
    _add_common(p)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--engine", default="discrete", choices=("discrete", "cmj"))

    p = sub.add_parser("verify", help="Monte Carlo check of I(T_n)/|T_n| against nu")
    _add_model_args(p)
    _add_common(p, threads=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=50)

    p = sub.add_parser("oracle", help="fuzz trees and compare the DP with brute force")
    _add_common(p)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--max-size", type=int, default=18)

    p = sub.add_parser("fringe", help="estimate nu from random fringe trees")
    _add_model_args(p)
    _add_common(p, threads=True)
    p.add_argument("--trials", type=int, default=10**5)
    return parser


def spec_from_args(args: argparse.Namespace) -> ModelSpec:
    model = Model(args.model)
    try:
        if model is Model.PA:
            return ModelSpec.pa(args.chi, args.rho, args.root_rate)
        if args.root_rate is not None:
            raise ValueError("--root-rate only applies to --model pa")
        if model is Model.MARY:
            return ModelSpec.mary(args.m)
        if model is Model.XBST:
            return ModelSpec.xbst(args.size_mode)
        return ModelSpec(model)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue().rstrip("\n")


def _write(out_dir: Optional[str], name: str, text: str) -> Path:
    path = Path(out_dir or ".")
    path.mkdir(parents=True, exist_ok=True)
    path = path / name
    path.write_text(text)
    return path


# -- subcommands ---------------------------------------------------------------------


def cmd_solve(args) -> tuple[int, str]:
    spec = spec_from_args(args)
    if args.generic:
        if not args.step > 0 or not args.t_max > 0:
            raise UsageError("--step and --t-max must be positive")
        pf = solve_p_generic(spec, args.t_max, args.step)
        res = analytic.nu_from_p(pf)
        if args.output_dir:
            _write(args.output_dir, "p_grid.csv", pf.to_csv())
    else:
        res = analytic.solve_nu(spec)
    res = analytic.NuResult(res.nu, res.method, res.abs_error_estimate, spec.model.value, spec.params())
    if args.format == "json":
        return EXIT_OK, res.to_json()
    if args.format == "csv":
        return EXIT_OK, _csv(
            [("model", "params", "nu", "method", "abs_error_estimate"),
             (spec.model.value, json.dumps(spec.params(), sort_keys=True), repr(res.nu), res.method,
              repr(res.abs_error_estimate))]
        )
    return EXIT_OK, (
        f"model: {spec.label()}\n"
        f"nu: {res.nu:.8f}\n"
        f"abs_error_estimate: {res.abs_error_estimate:.2e}\n"
        f"method: {res.method}"
    )


def cmd_simulate(args) -> tuple[int, str]:
    spec = spec_from_args(args)
    if not args.n >= 1:
        raise UsageError("--n must be at least 1")
    if args.engine == "discrete":
        if args.n != int(args.n):
            raise UsageError("--n must be an integer for the discrete engine")
        tree = gen_discrete(spec, int(args.n), make_rng(args.seed))
        tau = None
    else:
        tree, tau = simulate_cmj(spec, args.n, make_rng(args.seed))
    prof = independence_profile(tree)
    tree_path = _write(args.output_dir, "tree.txt", "")
    write_tree(tree, tree_path)
    if tree.birth_time is not None:
        write_birth_times(tree.birth_time, tree_path.with_name("birth_times.txt"))
    summary = {
        "model": spec.model.value,
        "params": spec.params(),
        "seed": args.seed,
        "engine": args.engine,
        "node_count": tree.node_count,
        "independence": prof.tree_i,
        "ratio": prof.tree_i / tree.node_count,
        "root_essential": prof.root_essential,
        "matching": prof.matching,
        "vertex_cover": prof.vertex_cover,
        "nullity": prof.nullity,
        "tau": tau,
    }
    if args.format == "json":
        return EXIT_OK, json.dumps(summary, sort_keys=True)
    if args.format == "csv":
        keys = list(summary)
        vals = [json.dumps(v, sort_keys=True) if isinstance(v, dict) else ("" if v is None else v) for v in summary.values()]
        return EXIT_OK, _csv([keys, [repr(v) if isinstance(v, float) else v for v in vals]])
    lines = [f"model: {spec.label()}", f"tree: {tree_path}"]
    for k in ("node_count", "independence", "matching", "vertex_cover", "nullity", "root_essential"):
        lines.append(f"{k}: {summary[k]}")
    lines.append(f"ratio: {summary['ratio']:.8f}")
    if tau is not None:
        lines.append(f"tau: {tau:.8f}")
    return EXIT_OK, "\n".join(lines)


def cmd_verify(args) -> tuple[int, str]:
    spec = spec_from_args(args)
    if args.n < 1 or args.trials < 1:
        raise UsageError("--n and --trials must be at least 1")
    rep = run_trials(spec, args.n, args.trials, args.seed, args.threads)
    if args.output_dir:
        rep.write(args.output_dir)
    verdict = rep.verdict()
    code = EXIT_FAIL if verdict is False else EXIT_OK
    agg = rep.aggregate()
    agg["verdict"] = {True: "pass", False: "fail", None: "no analytic nu"}[verdict]
    if args.format == "json":
        return code, json.dumps(agg, sort_keys=True)
    if args.format == "csv":
        return code, rep.to_csv().rstrip("\n")
    lines = [
        f"model: {spec.label()}",
        f"n: {rep.n_target}",
        f"trials: {rep.trials}",
        f"mean_ratio: {rep.mean_ratio:.8f}",
        f"std_error: {rep.std_error:.8f}",
    ]
    if rep.analytic_nu is not None:
        lines.append(f"analytic_nu: {rep.analytic_nu:.8f}")
        lines.append(f"abs_deviation: {rep.abs_deviation:.8f}")
    lines.append(f"verdict: {agg['verdict']}")
    return code, "\n".join(lines)


def cmd_oracle(args) -> tuple[int, str]:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if not 1 <= args.max_size <= 25:
        raise UsageError("--max-size must lie in 1..25")
    mismatches = fuzz_oracle(args.count, args.max_size, args.seed)
    code = EXIT_OK if not mismatches else EXIT_FAIL
    if args.format == "json":
        return code, json.dumps({"count": args.count, "max_size": args.max_size, "seed": args.seed,
                                 "mismatches": len(mismatches)}, sort_keys=True)
    if args.format == "csv":
        return code, _csv([("count", "max_size", "seed", "mismatches"),
                           (args.count, args.max_size, args.seed, len(mismatches))])
    lines = [f"checked: {args.count} trees (max size {args.max_size})", f"mismatches: {len(mismatches)}"]
    lines += [f"  mismatch: {spec} size {size} dp={dp} brute={bf}" for spec, size, dp, bf in mismatches[:10]]
    return code, "\n".join(lines)


FUZZ_SPECS = (
    ModelSpec.rrt(),
    ModelSpec.bst(),
    ModelSpec.pa(1.0, 1.0),
    ModelSpec.pa(-0.5, 1.5),
    ModelSpec.xbst(),
    ModelSpec.mary(3),
    ModelSpec.mary(4),
)


def fuzz_trees(count: int, max_size: int, seed: int):
    """Yield ``count`` random trees of at most ``max_size`` nodes, cycling over all generators."""
    rng = make_rng(seed)
    k = 0
    while k < count:
        spec = FUZZ_SPECS[k % len(FUZZ_SPECS)]
        n = int(rng.integers(1, max_size + 1))
        tree = gen_discrete(spec, n, make_rng(seed, k))
        if tree.node_count > max_size:
            # XBST and m-ary trees have more nodes than n; shrink and retry.
            n = max(1, (max_size - 1) // 2) if spec.model is Model.XBST else max(1, n // 2)
            tree = gen_discrete(spec, n, make_rng(seed, k))
            if tree.node_count > max_size:
                tree = gen_discrete(spec, 1, make_rng(seed, k))
        yield spec, tree
        k += 1


def fuzz_oracle(count: int, max_size: int, seed: int) -> list:
    mismatches = []
    for spec, tree in fuzz_trees(count, max_size, seed):
        dp = independence_profile(tree).tree_i
        bf = brute_force_independence(tree)
        if dp != bf:
            mismatches.append((spec.label(), tree.node_count, dp, bf))
    return mismatches


def cmd_fringe(args) -> tuple[int, str]:
    spec = spec_from_args(args)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    est = estimate_nu_fringe(spec, args.trials, args.seed, args.threads)
    nu = analytic.analytic_nu(spec)
    out = {
        "model": spec.model.value,
        "params": spec.params(),
        "trials": est.trials,
        "seed": args.seed,
        "estimate": est.estimate,
        "std_error": est.std_error,
        "redraws": est.redraws,
        "analytic_nu": nu,
    }
    if args.output_dir:
        _write(args.output_dir, "fringe.json", json.dumps(out, sort_keys=True) + "\n")
    if args.format == "json":
        return EXIT_OK, json.dumps(out, sort_keys=True)
    if args.format == "csv":
        return EXIT_OK, _csv([list(out), [json.dumps(v, sort_keys=True) if isinstance(v, dict) else
                                          ("" if v is None else (repr(v) if isinstance(v, float) else v))
                                          for v in out.values()]])
    lines = [
        f"model: {spec.label()}",
        f"trials: {est.trials}",
        f"estimate: {est.estimate:.8f}",
        f"std_error: {est.std_error:.8f}",
        f"redraws: {est.redraws}",
    ]
    if nu is not None:
        lines.append(f"analytic_nu: {nu:.8f}")
    return EXIT_OK, "\n".join(lines)


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "fringe": cmd_fringe,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        code, text = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, SizeGuardExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(text)
    if not args.no_timing:
        print(f"elapsed: {time.perf_counter() - start:.3f} s")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
