"""Monte-Carlo studies of solver complexity, convergence and phase transitions.

Every study draws its instances from seeds ``(seed, point, index)`` so
results depend only on the configuration, never on worker scheduling.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .dynamics import ValidationError
from .instances import GenParams, InstanceSpec, generate
from .solver import SolverConfig, Strategy, solve

DEFAULT_PROOF_BUDGET = 1_000_000

Verdict = Literal["yes", "no", "unknown"]


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Ordered map, optionally over a process pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def percent_difference(ub_means, opt_mean: float) -> np.ndarray:
    if opt_mean == 0:
        raise ValueError("percent difference is undefined when the mean optimum is 0")
    return 100.0 * (np.asarray(ub_means, dtype=float) - opt_mean) / opt_mean


@dataclass
class InstanceRun:
    index: int
    seed: tuple[int, ...]
    n: int
    m: int
    epsilon: float
    strategy: str
    k_max: int | None
    j_best: float
    proven_optimal: bool
    branches: int
    k_best: int
    pruned: int
    ub_trace: list[tuple[int, float]]
    wall_seconds: float


def _solve_one(args) -> InstanceRun:
    index, seed, params, config = args
    inst = generate(params, seed)
    t0 = time.perf_counter()
    res = solve(inst, config)
    wall = time.perf_counter() - t0
    return InstanceRun(index, seed, params.n, params.m, inst.epsilon, config.strategy.value,
                       config.k_max, res.j_ub_best, res.proven_optimal, res.branches_explored,
                       res.k_best, res.pruned, res.ub_trace, wall)


def run_instances(params: GenParams, config: SolverConfig, count: int, seed: int = 0,
                  threads: int = 1) -> list[InstanceRun]:
    if count < 1:
        raise ValidationError("count must be at least 1")
    jobs = [(i, (seed, i), params, config) for i in range(count)]
    return parallel_map(_solve_one, jobs, threads)


@dataclass
class ComplexityStudy:
    runs: list[InstanceRun]

    def cdf(self, key: str = "wall_seconds") -> tuple[np.ndarray, np.ndarray]:
        """Empirical fraction solved versus cost; unsolved instances never count."""
        values = np.sort([getattr(r, key) for r in self.runs if r.proven_optimal])
        frac = np.arange(1, len(values) + 1) / len(self.runs)
        return values, frac

    @property
    def fraction_solved(self) -> float:
        return sum(r.proven_optimal for r in self.runs) / len(self.runs)


def run_complexity_study(n: int, m: int, epsilon: float, count: int,
                         budget: int | None = DEFAULT_PROOF_BUDGET, seed: int = 0,
                         strategy: Strategy | str = Strategy.ASTAR_BFS,
                         time_budget: float | None = None, threads: int = 1,
                         params: GenParams | None = None) -> ComplexityStudy:
    params = replace(params or GenParams(), n=n, m=m, epsilon=epsilon)
    config = SolverConfig(strategy=strategy, k_max=budget, time_budget=time_budget)
    return ComplexityStudy(run_instances(params, config, count, seed, threads))


@dataclass
class ConvergenceStats:
    k: np.ndarray
    ub_mean: dict[str, np.ndarray]
    opt_mean: float
    pd: dict[str, np.ndarray]
    branches_to_converge: list[int]
    branches_to_prove: list[int]
    excluded: int = 0
    instances: int = 0


def _convergence_one(args):
    index, seed, params, strategies, k_curve, budget = args
    inst = generate(params, seed)
    full = solve(inst, SolverConfig(strategy=Strategy.ASTAR_BFS, k_max=budget))
    if not full.proven_optimal:
        return None
    curves = {}
    for s in strategies:
        res = full if s is Strategy.ASTAR_BFS else solve(inst, SolverConfig(strategy=s, k_max=k_curve))
        curves[s.value] = [res.ub_at(k) for k in range(1, k_curve + 1)]
    return full.j_ub_best, curves, full.k_best, full.branches_explored


def run_convergence_study(n: int, m: int, epsilon: float, count: int, seed: int = 0,
                          k_curve: int = 50, budget: int = DEFAULT_PROOF_BUDGET,
                          strategies: Iterable[Strategy | str] = (Strategy.BFS, Strategy.DFS,
                                                                  Strategy.ASTAR_BFS),
                          threads: int = 1, params: GenParams | None = None) -> ConvergenceStats:
    """Mean best upper bound after ``k`` branches, per branching strategy.

    Optima come from a full A* (breadth-first) proof; instances that are
    not proven within ``budget`` branches are excluded and counted.
    """
    if count < 1:
        raise ValidationError("count must be at least 1")
    strategies = [Strategy(s) for s in strategies]
    params = replace(params or GenParams(), n=n, m=m, epsilon=epsilon)
    jobs = [(i, (seed, i), params, strategies, k_curve, budget) for i in range(count)]
    results = parallel_map(_convergence_one, jobs, threads)
    kept = [r for r in results if r is not None]
    if not kept:
        raise RuntimeError("no instance was solved to proven optimality")
    opt_mean = float(np.mean([r[0] for r in kept]))
    ub_mean = {s.value: np.mean([r[1][s.value] for r in kept], axis=0) for s in strategies}
    pd = {s: percent_difference(v, opt_mean) for s, v in ub_mean.items()}
    return ConvergenceStats(
        k=np.arange(1, k_curve + 1), ub_mean=ub_mean, opt_mean=opt_mean, pd=pd,
        branches_to_converge=[r[2] for r in kept], branches_to_prove=[r[3] for r in kept],
        excluded=len(results) - len(kept), instances=len(kept))


def rdd_decide(instance: InstanceSpec, budget: int | None = DEFAULT_PROOF_BUDGET,
               strategy: Strategy | str = Strategy.ASTAR_BFS) -> tuple[Verdict, int]:
    """Can every attacker be kept out of the zone?  Returns the verdict and branch count."""
    res = solve(instance, SolverConfig(strategy=strategy, k_max=budget, epsilon=0.0, cutoff=1.0))
    if res.j_ub_best == 0:
        return "yes", res.branches_explored
    if res.proven_optimal:
        return "no", res.branches_explored
    return "unknown", res.branches_explored


@dataclass
class PhasePoint:
    control: float
    fraction_yes: float
    mean_branches: float
    instances: int
    unknown: int = 0
    n: int = 0
    m: int = 0


def _rdd_one(args):
    seed, params, budget = args
    return rdd_decide(generate(params, seed), budget)


def phase_grid(start: float, stop: float, points: int, spacing: str = "log") -> list[float]:
    if points < 1:
        raise ValidationError("need at least one grid point")
    if points == 1:
        return [float(start)]
    if spacing == "log":
        return [float(v) for v in np.geomspace(start, stop, points)]
    return [float(v) for v in np.linspace(start, stop, points)]


def point_params(axis: str, value: float, n: int, m: int, base: GenParams) -> GenParams:
    """Generator parameters for one sweep point.

    ``velocity_ratio`` sets the attacker speed to ``value`` times the
    defender's terminal speed of 1.  ``team_ratio`` keeps ``m`` and picks
    ``n = round(value * m)`` (at least 1).
    """
    if axis == "velocity_ratio":
        return replace(base, n=n, m=m, v_a_range=(value, value), epsilon=0.0)
    if axis == "team_ratio":
        return replace(base, n=max(1, int(round(value * m))), m=m, v_a_range=(1.0, 1.0),
                       epsilon=0.0)
    raise ValidationError(f"unknown sweep axis {axis!r}")


def run_phase_transition(axis: str, grid: Sequence[float], instances_per_point: int,
                         n: int = 3, m: int = 5, seed: int = 0,
                         budget: int | None = DEFAULT_PROOF_BUDGET, threads: int = 1,
                         params: GenParams | None = None) -> list[PhasePoint]:
    if not grid:
        raise ValidationError("grid must be nonempty")
    if instances_per_point < 1:
        raise ValidationError("need at least one instance per point")
    base = params or GenParams()
    jobs, metas = [], []
    for i, value in enumerate(grid):
        pp = point_params(axis, value, n, m, base)
        metas.append(pp)
        jobs.extend(((seed, i, j), pp, budget) for j in range(instances_per_point))
    verdicts = parallel_map(_rdd_one, jobs, threads)
    points = []
    for i, value in enumerate(grid):
        chunk = verdicts[i * instances_per_point:(i + 1) * instances_per_point]
        known = [v for v, _ in chunk if v != "unknown"]
        yes = sum(v == "yes" for v in known)
        pp = metas[i]
        control = value if axis == "velocity_ratio" else pp.n / pp.m
        points.append(PhasePoint(
            control=float(control),
            fraction_yes=yes / len(known) if known else math.nan,
            mean_branches=float(np.mean([b for _, b in chunk])),
            instances=len(chunk), unknown=len(chunk) - len(known), n=pp.n, m=pp.m))
    return points


def crossing_point(points: Sequence[PhasePoint], level: float = 0.5) -> float:
    """First control value where ``fraction_yes`` crosses ``level`` (linear interpolation)."""
    xs = [p.control for p in points]
    ys = [p.fraction_yes for p in points]
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if (y0 - level) * (y1 - level) <= 0 and y0 != y1:
            return x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    return math.nan
