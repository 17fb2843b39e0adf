"""Minimum-time intercept primitive.

A defender intercepts an attacker by arriving at the attacker's position
with zero velocity.  The disk constraint ``ux^2 + uy^2 <= 1`` is replaced
by its inscribed box ``|ux|, |uy| <= 1/sqrt(2)`` so that each axis becomes
an independent scalar problem ``x'' + x' = u`` with a bang-bang optimum.

Two closed forms carry the work:

* the minimum time to bring one axis to rest at the origin (at most one
  switch; the switch time solves a quadratic in ``exp(-t1)``), and
* the interval of positions at which one axis can be at rest at exactly
  time ``tau``.  The interval only grows with ``tau`` because a vehicle at
  rest can hold position with zero input.

``int_time`` scans candidate rendezvous times on a grid of a quarter
sample period and bisects the first feasible bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import (
    AttackerTrack,
    DefenderState,
    SampleGrid,
    ValidationError,
    attacker_position_at,
)

U_AXIS = 1.0 / math.sqrt(2.0)
NEVER = math.inf

_BISECT_TOL = 1e-7
_FEAS_TOL = 1e-12
_CHUNK = 1024


@dataclass(frozen=True)
class FieldConfig:
    R_dz: float = 2.0
    # search cutoff for attackers whose path never meets the zone
    horizon: float = 100.0

    def __post_init__(self):
        if not self.R_dz > 0:
            raise ValidationError("Defense Zone radius must be positive")
        if not self.horizon > 0:
            raise ValidationError("horizon must be positive")


@dataclass(frozen=True)
class InterceptResult:
    delta_t: float
    intercept_point: tuple[float, float] | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.delta_t)


def zone_entry_time(a: AttackerTrack, field: FieldConfig) -> float:
    """First time the straight-line path reaches the closed Defense Zone."""
    R = field.R_dz
    px, py, vx, vy = a.p, a.q, a.vp, a.vq
    c = px * px + py * py - R * R
    if c <= 0:
        return 0.0
    A = vx * vx + vy * vy
    B = 2.0 * (px * vx + py * vy)
    if A == 0.0 or B >= 0.0:
        return NEVER
    disc = B * B - 4.0 * A * c
    if disc < 0:
        return NEVER
    # smaller root, written to avoid cancellation (B < 0)
    return 2.0 * c / (-B + math.sqrt(disc))


def _time_push_then_brake(x: float, v: float, U: float) -> float:
    """Time for ``+U`` then ``-U`` to reach rest at 0, or inf if that order fails."""
    z = (x + v) / U
    if z > 700.0:
        return NEVER
    a = v - U
    disc = 1.0 + a * math.exp(z) / U
    if disc < 0.0:
        return NEVER
    log_w = z - math.log1p(math.sqrt(disc))
    if log_w > 1e-12:
        return NEVER
    log_w = min(log_w, 0.0)
    w = math.exp(log_w)
    return -log_w + math.log(2.0 + a * w / U)


def min_time_to_point_1d(rel_pos: float, rel_vel: float, u_max: float = U_AXIS) -> float:
    """Minimum time for ``x'' + x' = u, |u| <= u_max`` to come to rest at the origin.

    ``rel_pos`` and ``rel_vel`` are the state relative to the target point.
    """
    if not u_max > 0:
        raise ValidationError("u_max must be positive")
    return min(_time_push_then_brake(rel_pos, rel_vel, u_max),
               _time_push_then_brake(-rel_pos, -rel_vel, u_max))


def axis_plan(rel_pos: float, rel_vel: float, u_max: float = U_AXIS) -> tuple[float, float, float]:
    """Bang-bang plan ``(first_input, t1, t2)`` bringing one axis to rest at the origin.

    The first input is applied for ``t1``, its negation for ``t2``, after
    which the axis holds at rest with zero input.
    """
    best = None
    for sign in (1.0, -1.0):
        x, v = sign * rel_pos, sign * rel_vel
        total = _time_push_then_brake(x, v, u_max)
        if total == NEVER:
            continue
        z = (x + v) / u_max
        a = v - u_max
        log_w = min(z - math.log1p(math.sqrt(max(1.0 + a * math.exp(z) / u_max, 0.0))), 0.0)
        t1 = -log_w
        t2 = max(total - t1, 0.0)
        if best is None or total < best[1] + best[2]:
            best = (sign * u_max, t1, t2)
    if best is None:
        raise ArithmeticError("no bang-bang plan found")  # unreachable for finite input
    return best


def reachable_at(s: DefenderState, target: Sequence[float], tau: float, u_max: float = U_AXIS) -> bool:
    """Can the defender be at rest on ``target`` by time ``tau``?"""
    if tau < 0:
        raise ValidationError("tau must be nonnegative")
    tx = min_time_to_point_1d(s.x - target[0], s.vx, u_max)
    ty = min_time_to_point_1d(s.y - target[1], s.vy, u_max)
    return max(tx, ty) <= tau + 1e-9


def rest_interval(pos, vel, tau, u_max: float = U_AXIS):
    """Positions where one axis can be at rest at exactly ``tau``.

    Returns ``(lo, hi, ok)``; ``ok`` is False when ``tau`` is too short to
    stop at all.  Works elementwise on arrays of ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    decay = np.exp(-tau)
    U = u_max
    drift = pos + vel
    with np.errstate(divide="ignore", invalid="ignore"):
        hi = drift + U * (tau + 2.0 * np.log((U + (U - vel) * decay) / (2.0 * U)))
        lo = drift - U * (tau + 2.0 * np.log((U + (U + vel) * decay) / (2.0 * U)))
    ok = tau >= math.log1p(abs(vel) / U) - _FEAS_TOL
    return lo, hi, ok


def _scalar_feasible(d: DefenderState, ax: float, ay: float, vx: float, vy: float, tau: float) -> bool:
    U = U_AXIS
    if tau < math.log1p(abs(d.vx) / U) - _FEAS_TOL or tau < math.log1p(abs(d.vy) / U) - _FEAS_TOL:
        return False
    decay = math.exp(-tau)
    tx, ty = ax + vx * tau, ay + vy * tau
    for pos, vel, target in ((d.x, d.vx, tx), (d.y, d.vy, ty)):
        up, down = U + (U - vel) * decay, U + (U + vel) * decay
        if up <= 0.0 or down <= 0.0:
            return False
        drift = pos + vel
        hi = drift + U * (tau + 2.0 * math.log(up / (2.0 * U)))
        lo = drift - U * (tau + 2.0 * math.log(down / (2.0 * U)))
        if not (lo - _FEAS_TOL <= target <= hi + _FEAS_TOL):
            return False
    return True


def int_time(d: DefenderState, a: AttackerTrack, t0: float, field: FieldConfig,
             grid: SampleGrid | None = None, entry_time: float | None = None) -> InterceptResult:
    """Minimum time for defender ``d`` to intercept attacker ``a`` starting at ``t0``.

    The intercept must happen strictly before the attacker reaches the
    Defense Zone; otherwise the result is infinite.
    """
    if a.active != 1:
        raise ValidationError("cannot intercept an inactive attacker")
    grid = grid or SampleGrid()
    if entry_time is None:
        entry_time = zone_entry_time(a, field)
    tau_max = min(entry_time - t0, field.horizon)
    if tau_max <= 0:
        return InterceptResult(NEVER)

    ax, ay = a.p + a.vp * t0, a.q + a.vq * t0
    vx, vy = a.vp, a.vq
    step = grid.T / 4.0
    n_grid = int(math.ceil(tau_max / step))
    last = tau_max - 1e-9
    U = U_AXIS
    stop_x = math.log1p(abs(d.vx) / U)
    stop_y = math.log1p(abs(d.vy) / U)

    prev_tau = None
    start = 0
    while start <= n_grid:
        stop = min(start + _CHUNK, n_grid + 1)
        taus = np.arange(start, stop, dtype=float) * step
        taus = taus[taus < last]
        if stop == n_grid + 1:
            taus = np.append(taus, last)
        if taus.size:
            lo_x, hi_x, ok_x = rest_interval(d.x, d.vx, taus)
            lo_y, hi_y, ok_y = rest_interval(d.y, d.vy, taus)
            tx = ax + vx * taus
            ty = ay + vy * taus
            feas = ((taus >= stop_x - _FEAS_TOL) & (taus >= stop_y - _FEAS_TOL)
                    & (lo_x - _FEAS_TOL <= tx) & (tx <= hi_x + _FEAS_TOL)
                    & (lo_y - _FEAS_TOL <= ty) & (ty <= hi_y + _FEAS_TOL))
            hits = np.flatnonzero(feas)
            if hits.size:
                i = int(hits[0])
                hi = float(taus[i])
                if i > 0:
                    lo = float(taus[i - 1])
                elif prev_tau is not None:
                    lo = prev_tau
                else:
                    lo = None
                if lo is not None:
                    while hi - lo > _BISECT_TOL:
                        mid = 0.5 * (lo + hi)
                        if _scalar_feasible(d, ax, ay, vx, vy, mid):
                            hi = mid
                        else:
                            lo = mid
                point = attacker_position_at(a, grid, t0 + hi)
                return InterceptResult(hi, point)
            prev_tau = float(taus[-1])
        start = stop
    return InterceptResult(NEVER)


class InterceptTable:
    """Memoized intercept times for one planning instance.

    Within a plan a defender is either in its initial state (at time 0) or
    at rest where it intercepted its previous attacker, so the defender
    state is fully determined by ``(defender, previous attacker, t0)``.
    Cached results are identical to direct ``int_time`` calls.
    """

    def __init__(self, defenders: Sequence[DefenderState], attackers: Sequence[AttackerTrack],
                 field: FieldConfig, grid: SampleGrid):
        self.defenders = list(defenders)
        self.attackers = list(attackers)
        self.field = field
        self.grid = grid
        self.entry = [zone_entry_time(a, field) for a in self.attackers]
        self._cache: dict[tuple, float] = {}
        self.calls = 0

    def defender_state(self, d: int, prev: int, t0: float) -> DefenderState:
        if prev < 0:
            return self.defenders[d]
        x, y = attacker_position_at(self.attackers[prev], self.grid, t0)
        return DefenderState(x, y, 0.0, 0.0)

    def __call__(self, d: int, prev: int, a: int, t0: float) -> float:
        key = (d, -1, a, t0) if prev < 0 else (-1, prev, a, t0)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.calls += 1
        if t0 >= self.entry[a]:
            dt = NEVER
        else:
            state = self.defender_state(d, prev, t0)
            dt = int_time(state, self.attackers[a], t0, self.field, self.grid,
                          entry_time=self.entry[a]).delta_t
        self._cache[key] = dt
        return dt
