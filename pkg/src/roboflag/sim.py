"""Closed-loop drill with replanning defenders and evasive attackers.

Defenders run two planning levels: task assignment (branch and bound)
every ``1/rate_ta`` and intercept trajectories every ``1/rate_tc``.
Attackers are the same vehicles as the defenders; they pick a destination
every ``1/rate_i`` (head for the origin, detouring around enlarged
defender discs) and replan a rest-to-rest trajectory to it every
``1/rate_tg``.  A rate of 0 means the level runs once at ``t = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dynamics import AttackerTrack, DefenderState, ValidationError, step_axis
from .instances import GenParams, InstanceSpec, generate
from .assignment import to_sequences
from .intercept import FieldConfig, axis_plan, int_time
from .solver import SolverConfig, Strategy, solve


@dataclass(frozen=True)
class SimConfig:
    rate_ta: float = 0.0
    rate_tc: float = 20.0
    rate_tg: float = 20.0
    rate_i: float = 2.0
    beta_enlarge: float = 2.0
    defender_radius: float = 0.1
    intercept_radius: float = 0.1
    avoid_margin: float = 1.0
    t_end: float = 40.0
    base_dt: float = 0.05
    # anytime budget of the assignment solver, in branches per unit of sim time
    ta_branch_rate: float = 200.0
    strategy: Strategy = Strategy.ASTAR_BFS
    epsilon: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not self.base_dt > 0:
            raise ValidationError("base_dt must be positive")
        if min(self.rate_ta, self.rate_tc, self.rate_tg, self.rate_i) < 0:
            raise ValidationError("rates must be nonnegative")
        if self.rate_ta > 0 and self.rate_tc > 0 and not self.rate_ta < self.rate_tc:
            raise ValidationError("assignment must replan slower than trajectories (rate_ta < rate_tc)")
        if self.rate_i > 0 and self.rate_tg > 0 and not self.rate_i < self.rate_tg:
            raise ValidationError("attacker intelligence must run slower than its trajectories")
        if not self.beta_enlarge > 1:
            raise ValidationError("enlargement factor must exceed 1")
        if min(self.defender_radius, self.intercept_radius, self.t_end) <= 0:
            raise ValidationError("radii and horizon must be positive")
        if self.ta_branch_rate <= 0:
            raise ValidationError("ta_branch_rate must be positive")

    @classmethod
    def with_divisor(cls, rta_div: float, **kw) -> "SimConfig":
        """Config with ``rate_ta = rate_tc / rta_div`` (0 disables replanning)."""
        base = cls(**kw)
        rate_ta = 0.0 if rta_div == 0 else base.rate_tc / rta_div
        return cls(**{**kw, "rate_ta": rate_ta})

    def period_steps(self, rate: float) -> int | None:
        if rate == 0:
            return None
        return max(1, int(round(1.0 / (rate * self.base_dt))))

    def ta_budget(self) -> int:
        interval = self.t_end if self.rate_ta == 0 else 1.0 / self.rate_ta
        return max(1, int(math.ceil(self.ta_branch_rate * interval)))


@dataclass
class SimOutcome:
    entered_count: int
    intercepted_count: int
    active_count: int
    m: int
    events: list[dict]
    final_defenders: list[tuple[float, float, float, float]]
    final_attackers: list[tuple[float, float, float, float]]
    t_final: float
    seed: object = None

    @property
    def fraction_entered(self) -> float:
        return self.entered_count / self.m if self.m else 0.0


# per-axis rest-to-rest plan: (first input, switch time, stop time) relative to plan start
AxisPlan = tuple[float, float, float]


def _advance_axis(pos: float, vel: float, plan: AxisPlan | None, elapsed: float, dt: float):
    """Integrate one axis exactly over ``dt`` following a bang-bang plan."""
    if plan is None:
        return step_axis(pos, vel, 0.0, dt)
    u0, t1, t2 = plan
    marks = ((t1, u0), (t1 + t2, -u0), (math.inf, 0.0))
    t, end = elapsed, elapsed + dt
    for until, u in marks:
        if t >= end:
            break
        if t < until:
            seg = min(until, end) - t
            if seg > 0:
                pos, vel = step_axis(pos, vel, u, seg)
            t += seg
    return pos, vel


def attacker_trajectory(state: Sequence[float], destination: Sequence[float]) -> tuple[AxisPlan, AxisPlan]:
    """Minimum-time rest-to-rest plan per axis toward ``destination``."""
    x, y, vx, vy = state
    return (axis_plan(x - destination[0], vx), axis_plan(y - destination[1], vy))


def _segment_distance(p, q, c) -> float:
    px, py = p
    dx, dy = q[0] - px, q[1] - py
    L2 = dx * dx + dy * dy
    s = 0.0 if L2 == 0 else max(0.0, min(1.0, ((c[0] - px) * dx + (c[1] - py) * dy) / L2))
    return math.hypot(px + s * dx - c[0], py + s * dy - c[1])


def attacker_intelligence(position: Sequence[float], defenders: Sequence[Sequence[float]],
                          cfg: SimConfig) -> tuple[float, float]:
    """Destination for an attacker heading to the origin around enlarged defenders.

    The straight run to the origin is used when no enlarged disc touches
    it.  Otherwise the attacker aims along a tangent line of the nearest
    blocking disc, to the point past the tangency that lies
    ``rho * (1 + avoid_margin)`` from the center, on whichever side gives
    the shorter path to the origin (counterclockwise on a tie).  An attacker already inside an
    enlarged disc has no tangent and holds position.
    """
    px, py = position
    rho = cfg.beta_enlarge * cfg.defender_radius
    origin = (0.0, 0.0)
    blocking = [(math.hypot(px - c[0], py - c[1]), i) for i, c in enumerate(defenders)
                if _segment_distance((px, py), origin, c) < rho]
    if not blocking:
        return origin
    dist, i = min(blocking)
    if dist <= rho:
        return (px, py)
    cx, cy = defenders[i][0], defenders[i][1]
    base = math.atan2(py - cy, px - cx)
    half = math.acos(rho / dist)
    # distance along the tangent line past the tangent point, so that the
    # waypoint sits rho * (1 + margin) from the center
    run = rho * math.sqrt((1.0 + cfg.avoid_margin) ** 2 - 1.0)
    best = None
    for sign in (1.0, -1.0):
        ang = base + sign * half
        tx, ty = cx + rho * math.cos(ang), cy + rho * math.sin(ang)
        ux, uy = tx - px, ty - py
        L = math.hypot(ux, uy)
        w = (tx + run * ux / L, ty + run * uy / L)
        length = math.hypot(w[0] - px, w[1] - py) + math.hypot(w[0], w[1])
        if best is None or length < best[0] - 1e-12:
            best = (length, w)
    return best[1]


class _Vehicle:
    __slots__ = ("x", "y", "vx", "vy", "plan", "plan_t")

    def __init__(self, x, y, vx, vy):
        self.x, self.y, self.vx, self.vy = x, y, vx, vy
        self.plan: tuple[AxisPlan, AxisPlan] | None = None
        self.plan_t = 0.0

    @property
    def state(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.vx, self.vy)

    def advance(self, t: float, dt: float) -> None:
        plan = self.plan or (None, None)
        e = t - self.plan_t
        self.x, self.vx = _advance_axis(self.x, self.vx, plan[0], e, dt)
        self.y, self.vy = _advance_axis(self.y, self.vy, plan[1], e, dt)

    def head_to(self, target: Sequence[float], t: float) -> None:
        self.plan = attacker_trajectory(self.state, target)
        self.plan_t = t


def clamp_outside_zone(point: Sequence[float], R_dz: float) -> tuple[float, float]:
    """Nearest point on the zone boundary for targets inside it."""
    x, y = point
    r = math.hypot(x, y)
    if r >= R_dz:
        return (x, y)
    if r == 0:
        return (R_dz, 0.0)
    return (x * R_dz / r, y * R_dz / r)


def _due(step: int, period: int | None) -> bool:
    return step == 0 if period is None else step % period == 0


def simulate(instance: InstanceSpec, cfg: SimConfig, seed: int = 0) -> SimOutcome:
    """Play the drill until ``t_end`` or until no attacker is active.

    The loop itself is deterministic; ``seed`` is only echoed so outcomes
    can be matched to the instance that produced them.
    """
    field_cfg: FieldConfig = instance.field
    R2 = field_cfg.R_dz ** 2
    defenders = [_Vehicle(d.x, d.y, d.vx, d.vy) for d in instance.defenders]
    attackers = [_Vehicle(a.p, a.q, a.vp, a.vq) for a in instance.attackers]
    m = len(attackers)
    status = ["active"] * m
    est_vel = [(a.vp, a.vq) for a in instance.attackers]
    destinations: list[tuple[float, float]] = [(0.0, 0.0)] * m
    sequences: list[list[int]] = [[] for _ in defenders]
    events: list[dict] = []

    p_ta = cfg.period_steps(cfg.rate_ta)
    p_tc = cfg.period_steps(cfg.rate_tc)
    p_tg = cfg.period_steps(cfg.rate_tg)
    p_i = cfg.period_steps(cfg.rate_i)
    dt = cfg.base_dt
    n_steps = int(round(cfg.t_end / dt))
    budget = cfg.ta_budget()

    def planning_tracks(active):
        return [AttackerTrack(attackers[j].x, attackers[j].y, *est_vel[j]) for j in active]

    step = 0
    t = 0.0
    while step < n_steps and any(s == "active" for s in status) and defenders:
        t = step * dt
        active = [j for j in range(m) if status[j] == "active"]
        if _due(step, p_ta):
            plan_inst = InstanceSpec(field_cfg, [DefenderState(*v.state) for v in defenders],
                                     planning_tracks(active), instance.grid, cfg.epsilon)
            res = solve(plan_inst, SolverConfig(strategy=cfg.strategy, k_max=budget))
            sequences = [[active[j - 1] for j in seq]
                         for seq in to_sequences(res.best_assignment, len(defenders))]
            events.append({"t": t, "kind": "assign", "sequences": [list(s) for s in sequences],
                           "j": res.j_ub_best, "branches": res.branches_explored})
        if _due(step, p_tc):
            tracks = dict(zip(active, planning_tracks(active)))
            for d, veh in enumerate(defenders):
                target = None
                state = DefenderState(*veh.state)
                for j in sequences[d]:
                    if status[j] != "active":
                        continue
                    res = int_time(state, tracks[j], 0.0, field_cfg, instance.grid)
                    if res.finite:
                        target = res.intercept_point
                        break
                if target is None:
                    veh.plan = None
                else:
                    veh.head_to(clamp_outside_zone(target, field_cfg.R_dz), t)
        if _due(step, p_i):
            centers = [(v.x, v.y) for v in defenders]
            for j in active:
                destinations[j] = attacker_intelligence((attackers[j].x, attackers[j].y), centers, cfg)
        if _due(step, p_tg) or _due(step, p_i):
            for j in active:
                attackers[j].head_to(destinations[j], t)

        for veh in defenders:
            veh.advance(t, dt)
        for j in active:
            a = attackers[j]
            x0, y0 = a.x, a.y
            a.advance(t, dt)
            est_vel[j] = ((a.x - x0) / dt, (a.y - y0) / dt)
        step += 1
        t = step * dt
        r_cap2 = cfg.intercept_radius ** 2
        for j in active:
            a = attackers[j]
            hit = None
            for d, veh in enumerate(defenders):
                if (veh.x - a.x) ** 2 + (veh.y - a.y) ** 2 <= r_cap2:
                    hit = d
                    break
            if hit is not None:
                status[j] = "intercepted"
                a.vx = a.vy = 0.0
                a.plan = None
                events.append({"t": t, "kind": "intercept", "attacker": j, "defender": hit})
            elif a.x * a.x + a.y * a.y <= R2:
                status[j] = "entered"
                a.vx = a.vy = 0.0
                a.plan = None
                events.append({"t": t, "kind": "enter", "attacker": j})

    return SimOutcome(
        entered_count=status.count("entered"),
        intercepted_count=status.count("intercepted"),
        active_count=status.count("active"),
        m=m,
        events=events,
        final_defenders=[v.state for v in defenders],
        final_attackers=[a.state for a in attackers],
        t_final=t,
        seed=seed,
    )


def _simulate_seed(args):
    seed, params, cfg = args
    return simulate(generate(params, seed), cfg, seed)


def run_sim_batch(cfg: SimConfig, seeds: int, n: int = 8, m: int = 4, base_seed: int = 0,
                  threads: int = 1, params: GenParams | None = None) -> list[SimOutcome]:
    """One outcome per instance seed ``(base_seed, i)``, in seed order."""
    from .experiments import parallel_map

    if seeds < 1:
        raise ValidationError("need at least one seed")
    params = replace(params or GenParams(), n=n, m=m, v_a_range=(1.0, 1.0))
    jobs = [((base_seed, i), params, cfg) for i in range(seeds)]
    return parallel_map(_simulate_seed, jobs, threads)


def bootstrap_lower_bound(diffs: Sequence[float], confidence: float = 0.95,
                          resamples: int = 10_000, seed: int = 0) -> float:
    """One-sided percentile-bootstrap lower confidence bound on a mean."""
    d = np.asarray(diffs, dtype=float)
    if d.size == 0:
        raise ValidationError("no samples")
    rng = np.random.default_rng(seed)
    means = d[rng.integers(0, d.size, size=(resamples, d.size))].mean(axis=1)
    return float(np.quantile(means, 1.0 - confidence))
