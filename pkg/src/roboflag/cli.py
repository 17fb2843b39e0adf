"""Command-line entry points.

Exit codes: 0 success, 1 solver or per-row failure, 2 bad flags,
3 unreadable or malformed input file.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import io as rio
from .dynamics import ValidationError
from .experiments import (DEFAULT_PROOF_BUDGET, crossing_point, parallel_map, phase_grid,
                          run_convergence_study, run_phase_transition)
from .instances import GenParams, generate
from .sim import SimConfig, bootstrap_lower_bound, simulate
from .solver import SolverConfig, Strategy, solve

log = logging.getLogger("roboflag")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3

BENCH_HEADER = ["index", "seed", "n", "m", "epsilon", "strategy", "k_max", "status", "j_best",
                "proven_optimal", "branches", "k_best", "pruned", "ub_trace", "error"]
CONVERGE_HEADER = ["strategy", "k", "ub_mean", "pd"]
PHASE_HEADER = ["point", "axis", "value", "control", "n", "m", "instances", "unknown",
                "fraction_yes", "mean_branches"]
SIM_HEADER = ["index", "seed", "n", "m", "rate_ta", "rate_tc", "status", "entered",
              "intercepted", "active", "fraction_entered", "replans", "t_final", "error"]


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN,MAX, got {text!r}") from None
    return lo, hi


def _gen_params(args) -> GenParams:
    kw = {"n": args.n, "m": args.m}
    for flag, key in (("r_a", "r_a_range"), ("v_a", "v_a_range"), ("r_d", "r_d_range"),
                      ("v_d", "v_d_range")):
        value = getattr(args, flag, None)
        if value is not None:
            kw[key] = value
    if getattr(args, "heading", None):
        kw["attacker_heading"] = args.heading.replace("-", "_")
    if getattr(args, "rdz", None) is not None:
        kw["R_dz"] = args.rdz
    if getattr(args, "epsilon", None) is not None:
        kw["epsilon"] = args.epsilon
    return GenParams(**kw)


def _add_gen_flags(p, n_default=3, m_default=5):
    p.add_argument("--n", type=int, default=n_default, help="defenders")
    p.add_argument("--m", type=int, default=m_default, help="attackers")
    p.add_argument("--r-a", type=_range, metavar="MIN,MAX", help="attacker radius range")
    p.add_argument("--v-a", type=_range, metavar="MIN,MAX", help="attacker speed range")
    p.add_argument("--r-d", type=_range, metavar="MIN,MAX", help="defender radius range")
    p.add_argument("--v-d", type=_range, metavar="MIN,MAX", help="defender speed range")
    p.add_argument("--rdz", type=float, help="defense zone radius")
    p.add_argument("--heading", choices=["toward-origin", "uniform-random"])


def _start() -> tuple[float, str]:
    return time.perf_counter(), rio._now()


def _finish(args, out, config: dict, started: tuple[float, str], status: str = "ok",
            **extra) -> None:
    manifest = rio.RunManifest(command=args.command, seed=getattr(args, "seed", None),
                               config=config, outputs=[str(out), *extra.pop("outputs", [])])
    manifest.started_at = started[1]
    manifest.finish(time.perf_counter() - started[0], status)
    data = asdict(manifest)
    data.update(extra)
    rio.write_json(rio.manifest_path(out), data)


def _echo(args) -> dict:
    skip = {"func", "command", "verbose"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def cmd_gen(args) -> int:
    started = _start()
    inst = generate(_gen_params(args), args.seed)
    rio.save_instance(args.out, inst)
    _finish(args, args.out, _echo(args), started)
    log.info("wrote %s (%d defenders, %d attackers)", args.out, inst.n, inst.m)
    return EXIT_OK


def cmd_solve(args) -> int:
    started = _start()
    inst = rio.load_instance(args.instance)
    config = SolverConfig(
        strategy=args.strategy, k_max=args.kmax, epsilon=args.epsilon,
        time_budget=None if args.budget_ms is None else args.budget_ms / 1000.0)
    try:
        res = solve(inst, config)
    except ValidationError as exc:
        log.error("solve failed: %s", exc)
        return EXIT_FAILURE
    rio.save_result(args.out, res, {"n": inst.n, "m": inst.m, "strategy": config.strategy.value})
    _finish(args, args.out, _echo(args), started, primitive_calls=res.primitive_calls)
    log.info("J=%r after %d branches (%s)", res.j_ub_best, res.branches_explored, res.stop_reason)
    return EXIT_OK


def _bench_row(job) -> tuple[dict, float]:
    index, seed, params, config = job
    row = {"index": index, "seed": f"{seed[0]}:{seed[1]}", "n": params.n, "m": params.m,
           "epsilon": params.epsilon, "strategy": config.strategy.value, "k_max": config.k_max}
    t0 = time.perf_counter()
    try:
        res = solve(generate(params, seed), config)
    except Exception as exc:  # recorded per row, reflected in the exit code
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return row, time.perf_counter() - t0
    row.update(status="ok", j_best=res.j_ub_best, proven_optimal=res.proven_optimal,
               branches=res.branches_explored, k_best=res.k_best, pruned=res.pruned,
               ub_trace=rio.format_trace(res.ub_trace))
    return row, time.perf_counter() - t0


def cmd_bench(args) -> int:
    started = _start()
    params = _gen_params(args)
    config = SolverConfig(strategy=args.strategy, k_max=args.kmax,
                          time_budget=None if args.budget_ms is None else args.budget_ms / 1000.0)
    jobs = [(i, (args.seed, i), params, config) for i in range(args.count)]
    results = parallel_map(_bench_row, jobs, args.threads)
    rows = [r for r, _ in results]
    walls = [w for _, w in results]
    rio.write_csv(args.out, BENCH_HEADER, rows)
    failed = sum(r["status"] != "ok" for r in rows)
    outputs = []
    if args.plot:
        from .plotting import figure_path, plot_cdf
        solved = [r for r in rows if r.get("proven_optimal")]
        xs = np.sort([r["branches"] for r in solved])
        outputs.append(str(plot_cdf({config.strategy.value: (xs, np.arange(1, len(xs) + 1) / len(rows))},
                                    "branches explored", figure_path(args.out))))
    _finish(args, args.out, _echo(args), started, "partial" if failed else "ok",
            outputs=outputs, instance_wall_seconds=walls, failed_rows=failed)
    log.info("%d instances, %d solved, %d failed", len(rows),
             sum(bool(r.get("proven_optimal")) for r in rows), failed)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_converge(args) -> int:
    started = _start()
    stats = run_convergence_study(args.n, args.m, args.epsilon, args.count, seed=args.seed,
                                  k_curve=args.kcurve, threads=args.threads,
                                  params=_gen_params(args))
    rows = [{"strategy": s, "k": int(k), "ub_mean": float(u), "pd": float(p)}
            for s in stats.ub_mean for k, u, p in zip(stats.k, stats.ub_mean[s], stats.pd[s])]
    rio.write_csv(args.out, CONVERGE_HEADER, rows)
    outputs = []
    if args.plot:
        from .plotting import figure_path, plot_pd
        outputs.append(str(plot_pd(stats.k, stats.pd, figure_path(args.out))))
    summary = {"opt_mean": stats.opt_mean, "instances": stats.instances, "excluded": stats.excluded,
               "mean_branches_to_converge": float(np.mean(stats.branches_to_converge)),
               "mean_branches_to_prove": float(np.mean(stats.branches_to_prove))}
    _finish(args, args.out, _echo(args), started, outputs=outputs, summary=summary)
    log.info("opt mean %.4f over %d instances (%d excluded)", stats.opt_mean, stats.instances,
             stats.excluded)
    return EXIT_OK


def cmd_phase(args) -> int:
    started = _start()
    axis = args.axis.replace("-", "_")
    grid = phase_grid(args.start, args.stop, args.points, args.spacing)
    points = run_phase_transition(axis, grid, args.per_point, n=args.n, m=args.m, seed=args.seed,
                                  budget=args.budget, threads=args.threads,
                                  params=_gen_params(args))
    rows = [{"point": i, "axis": axis, "value": v, "control": p.control, "n": p.n, "m": p.m,
             "instances": p.instances, "unknown": p.unknown,
             "fraction_yes": p.fraction_yes, "mean_branches": p.mean_branches}
            for i, (v, p) in enumerate(zip(grid, points))]
    rio.write_csv(args.out, PHASE_HEADER, rows)
    outputs = []
    if args.plot:
        from .plotting import figure_path, plot_phase
        outputs.append(str(plot_phase([p.control for p in points], [p.fraction_yes for p in points],
                                      [p.mean_branches for p in points], axis.replace("_", " "),
                                      figure_path(args.out), log_x=args.spacing == "log")))
    crossing = crossing_point(points)
    unknown = sum(p.unknown for p in points)
    _finish(args, args.out, _echo(args), started, outputs=outputs,
            summary={"crossing_0.5": None if math.isnan(crossing) else crossing, "unknown": unknown})
    return EXIT_OK


def _sim_row(job) -> tuple[dict, list[dict]]:
    index, seed, params, cfg = job
    row = {"index": index, "seed": f"{seed[0]}:{seed[1]}", "n": params.n, "m": params.m,
           "rate_ta": cfg.rate_ta, "rate_tc": cfg.rate_tc}
    try:
        out = simulate(generate(params, seed), cfg, seed)
    except Exception as exc:
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return row, []
    row.update(status="ok", entered=out.entered_count, intercepted=out.intercepted_count,
               active=out.active_count, fraction_entered=out.fraction_entered,
               replans=sum(e["kind"] == "assign" for e in out.events), t_final=out.t_final)
    return row, [{"index": index, **e} for e in out.events]


def cmd_sim(args) -> int:
    started = _start()
    params = replace(_gen_params(args), v_a_range=args.v_a or (1.0, 1.0))
    overrides = {k: v for k, v in (("rate_tc", args.rate_tc), ("t_end", args.t_end),
                                   ("intercept_radius", args.intercept_radius),
                                   ("defender_radius", args.defender_radius),
                                   ("beta_enlarge", args.beta)) if v is not None}
    if args.rate_tc is not None:
        overrides.update(rate_tg=args.rate_tc, rate_i=args.rate_tc / 10.0)
    cfg = SimConfig.with_divisor(args.rta_div, **overrides)
    jobs = [(i, (args.seed, i), params, cfg) for i in range(args.seeds)]
    results = parallel_map(_sim_row, jobs, args.threads)
    rows = [r for r, _ in results]
    rio.write_csv(args.out, SIM_HEADER, rows)
    outputs = []
    if args.events:
        rio.write_jsonl(args.events, [e for _, events in results for e in events])
        outputs.append(str(args.events))
    ok = [r["fraction_entered"] for r in rows if r["status"] == "ok"]
    if args.plot:
        from .plotting import figure_path, plot_sim
        label = "no assignment replanning" if args.rta_div == 0 else f"rate_ta = rate_tc/{args.rta_div:g}"
        outputs.append(str(plot_sim(ok, label, figure_path(args.out))))
    failed = len(rows) - len(ok)
    _finish(args, args.out, _echo(args), started, "partial" if failed else "ok", outputs=outputs,
            sim_config=asdict(cfg),
            summary={"mean_fraction_entered": float(np.mean(ok)) if ok else None,
                     "failed_rows": failed})
    log.info("mean fraction entered %.4f over %d seeds", float(np.mean(ok)) if ok else math.nan,
             len(ok))
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_compare(args) -> int:
    """Paired comparison of two ``sim`` CSVs by seed."""
    a = {r["seed"]: r for r in rio.read_csv(args.baseline) if r["status"] == "ok"}
    b = {r["seed"]: r for r in rio.read_csv(args.treatment) if r["status"] == "ok"}
    common = sorted(set(a) & set(b), key=lambda s: tuple(int(x) for x in s.split(":")))
    if not common:
        log.error("no seeds in common")
        return EXIT_INPUT
    diffs = [float(a[s]["fraction_entered"]) - float(b[s]["fraction_entered"]) for s in common]
    lb = bootstrap_lower_bound(diffs, args.confidence, seed=0)
    print(f"seeds={len(common)} mean_diff={np.mean(diffs):.4f} "
          f"lower_bound_{args.confidence:g}={lb:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roboflag", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    strategies = [s.value for s in Strategy]

    p = sub.add_parser("gen", help="generate a random instance")
    _add_gen_flags(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--strategy", choices=strategies, default="astar-bfs")
    p.add_argument("--kmax", type=int, help="branch budget")
    p.add_argument("--epsilon", type=float, help="override the instance's time weight")
    p.add_argument("--budget-ms", type=float, help="wall-clock budget")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="solve a batch of random instances")
    _add_gen_flags(p)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--strategy", choices=strategies, default="astar-bfs")
    p.add_argument("--kmax", type=int, default=DEFAULT_PROOF_BUDGET)
    p.add_argument("--budget-ms", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--plot", action="store_true", help="also write a PNG next to the CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("converge", help="mean upper bound and PD(k) per strategy")
    _add_gen_flags(p)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--count", type=int, default=400)
    p.add_argument("--kcurve", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--plot", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("phase", help="decision-problem phase transition sweep")
    _add_gen_flags(p)
    p.add_argument("--axis", choices=["velocity-ratio", "team-ratio"], required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--per-point", type=int, default=100)
    p.add_argument("--spacing", choices=["log", "linear"], default="log")
    p.add_argument("--budget", type=int, default=DEFAULT_PROOF_BUDGET, help="branches per instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--plot", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("sim", help="closed-loop drill with replanning")
    _add_gen_flags(p, n_default=8, m_default=4)
    p.add_argument("--rta-div", type=float, default=0.0,
                   help="rate_ta = rate_tc / DIV; 0 plans the assignment once")
    p.add_argument("--rate-tc", type=float, help="trajectory rate (attacker rates follow)")
    p.add_argument("--t-end", type=float)
    p.add_argument("--intercept-radius", type=float)
    p.add_argument("--defender-radius", type=float)
    p.add_argument("--beta", type=float, help="defender enlargement factor")
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--events", help="JSON-lines event log path")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("compare", help="paired bootstrap comparison of two sim CSVs")
    p.add_argument("baseline")
    p.add_argument("treatment")
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except rio.InputError as exc:
        print(f"roboflag: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"roboflag: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"roboflag: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())
