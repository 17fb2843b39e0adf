"""Assignments of attacker sequences to defenders.

An assignment is stored in the two-vector form used by node expansion:
``delta[i]`` is a defender index and ``beta[i]`` an attacker index, both
1-based with 0 marking an unused slot.  Slots are grouped by defender in
nondecreasing order so that each assignment has exactly one encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .dynamics import ValidationError

# (defender, previous attacker or -1, attacker, start time) -> duration or inf
Primitive = Callable[[int, int, int, float], float]


@dataclass(frozen=True)
class Assignment:
    delta: tuple[int, ...]
    beta: tuple[int, ...]

    def __post_init__(self):
        delta, beta = tuple(self.delta), tuple(self.beta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "beta", beta)
        if len(delta) != len(beta):
            raise ValidationError("delta and beta must have equal length")
        m = len(delta)
        p = sum(1 for v in delta if v != 0)
        if any(v != 0 for v in delta[p:]) or any(v != 0 for v in beta[p:]):
            raise ValidationError("assigned slots must form a prefix")
        if any(v <= 0 for v in delta[:p]) or any(not 1 <= v <= m for v in beta[:p]):
            raise ValidationError("indices out of range")
        if any(delta[i] > delta[i + 1] for i in range(p - 1)):
            raise ValidationError("delta must be nondecreasing over the assigned prefix")
        if len(set(beta[:p])) != p:
            raise ValidationError("an attacker is assigned twice")

    @classmethod
    def empty(cls, m: int) -> "Assignment":
        return cls((0,) * m, (0,) * m)

    @property
    def m(self) -> int:
        return len(self.delta)

    @property
    def p(self) -> int:
        return sum(1 for v in self.delta if v != 0)

    @property
    def complete(self) -> bool:
        return self.p == self.m

    def unassigned(self) -> list[int]:
        used = set(self.beta)
        return [j for j in range(1, self.m + 1) if j not in used]

    def to_dict(self) -> dict:
        return {"delta": list(self.delta), "beta": list(self.beta)}

    @classmethod
    def from_dict(cls, data: dict) -> "Assignment":
        return cls(tuple(data["delta"]), tuple(data["beta"]))


def to_sequences(a: Assignment, n: int) -> list[list[int]]:
    """Per-defender attacker sequences (1-based attacker indices)."""
    seqs: list[list[int]] = [[] for _ in range(n)]
    for d, j in zip(a.delta, a.beta):
        if d == 0:
            break
        if d > n:
            raise ValidationError(f"defender {d} out of range for n={n}")
        seqs[d - 1].append(j)
    return seqs


def from_sequences(seqs: Sequence[Sequence[int]], m: int) -> Assignment:
    delta: list[int] = []
    beta: list[int] = []
    for d, seq in enumerate(seqs, start=1):
        for j in seq:
            delta.append(d)
            beta.append(j)
    pad = m - len(delta)
    if pad < 0:
        raise ValidationError("more assigned slots than attackers")
    return Assignment(tuple(delta) + (0,) * pad, tuple(beta) + (0,) * pad)


def last_defender(a: Assignment) -> int:
    """``delta(p)``, taken as 1 for the empty assignment."""
    p = a.p
    return a.delta[p - 1] if p else 1


def child_count(a: Assignment, n: int) -> int:
    return (n - last_defender(a) + 1) * (a.m - a.p)


def expand_node(parent: Assignment, n: int) -> list[Assignment]:
    """Children of ``parent``: every defender from ``delta(p)`` up, times every free attacker."""
    p, m = parent.p, parent.m
    if p == m:
        raise ValidationError("cannot expand a complete assignment")
    free = parent.unassigned()
    children = []
    for i in range(last_defender(parent), n + 1):
        for j in free:
            delta = parent.delta[:p] + (i,) + parent.delta[p + 1:]
            beta = parent.beta[:p] + (j,) + parent.beta[p + 1:]
            children.append(Assignment(delta, beta))
    return children


def count_complete_assignments(n: int, m: int) -> int:
    if n < 1 or m < 0:
        raise ValidationError("need n >= 1 and m >= 0")
    return math.factorial(n + m - 1) // math.factorial(n - 1)


@dataclass(frozen=True)
class EvaluatedAssignment:
    assignment: Assignment
    finish_times: tuple[tuple[float, ...], ...]
    gammas: dict[int, int]
    cost: float

    @property
    def j1(self) -> int:
        return sum(self.gammas.values())

    @property
    def j2(self) -> float:
        return max((ts[-1] for ts in self.finish_times), default=0.0)


def evaluate(a: Assignment, n: int, primitive: Primitive, epsilon: float = 0.01) -> EvaluatedAssignment:
    """Completion times, zone-entry indicators and cost of an assignment.

    ``finish_times[d]`` starts with ``t_d(0) = 0``.  An attacker that the
    defender cannot reach in time is skipped: its indicator is set and the
    defender's clock and position are left unchanged.
    """
    finish = []
    gammas: dict[int, int] = {}
    for d, seq in enumerate(to_sequences(a, n)):
        t, prev = 0.0, -1
        times = [t]
        for j in seq:
            dt = primitive(d, prev, j - 1, t)
            if math.isinf(dt):
                gammas[j] = 1
            else:
                gammas[j] = 0
                t = t + dt
                prev = j - 1
            times.append(t)
        finish.append(tuple(times))
    j2 = max((ts[-1] for ts in finish), default=0.0)
    cost = sum(gammas.values()) + epsilon * j2
    return EvaluatedAssignment(a, tuple(finish), gammas, cost)
