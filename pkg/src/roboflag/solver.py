"""Anytime branch and bound for the drill task-assignment problem.

The search tree enumerates assignments in the two-vector form of
:mod:`roboflag.assignment`.  Each explored node gets a greedy completion
(upper bound) and a relaxed completion in which a defender may chase all
remaining attackers at once (lower bound).  Subtrees whose lower bound
cannot beat the incumbent are pruned.  The search can stop after any
branch and still return the best complete assignment seen so far.

A node in the tree can only grow sequences of defenders numbered
``delta(p)`` and up, so both bounds range over those defenders only; the
greedy completion is therefore a leaf of the node's own subtree.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from .assignment import Assignment, Primitive, from_sequences, to_sequences
from .dynamics import ValidationError
from .instances import InstanceSpec

INF = math.inf


class Strategy(str, Enum):
    BFS = "bfs"
    DFS = "dfs"
    ASTAR_BFS = "astar-bfs"
    ASTAR_DFS = "astar-dfs"

    @property
    def sorted_children(self) -> bool:
        return self in (Strategy.ASTAR_BFS, Strategy.ASTAR_DFS)

    @property
    def depth_first(self) -> bool:
        return self in (Strategy.DFS, Strategy.ASTAR_DFS)


@dataclass(frozen=True)
class SolverConfig:
    strategy: Strategy = Strategy.ASTAR_BFS
    k_max: int | None = None
    time_budget: float | None = None  # seconds of wall clock
    epsilon: float | None = None  # None: use the instance's weight
    prune: bool = True
    # decision mode: prune any node whose lower bound reaches this value
    cutoff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.k_max is not None and self.k_max < 1:
            raise ValidationError("k_max must be at least 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")
        if self.time_budget is not None and self.time_budget < 0:
            raise ValidationError("time budget must be nonnegative")


@dataclass
class SolverResult:
    best_assignment: Assignment
    j_ub_best: float
    branches_explored: int
    proven_optimal: bool
    ub_trace: list[tuple[int, float]]
    pruned: int = 0
    k_best: int = 1
    stop_reason: str = "exhausted"
    primitive_calls: int = 0

    def ub_at(self, k: int) -> float:
        """Best upper bound after ``k`` branches."""
        value = self.ub_trace[0][1]
        for kk, j in self.ub_trace:
            if kk > k:
                break
            value = j
        return value

    def to_dict(self) -> dict:
        return {
            "best_assignment": self.best_assignment.to_dict(),
            "j_ub_best": self.j_ub_best,
            "branches_explored": self.branches_explored,
            "proven_optimal": self.proven_optimal,
            "ub_trace": [[k, j] for k, j in self.ub_trace],
            "pruned": self.pruned,
            "k_best": self.k_best,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolverResult":
        return cls(
            best_assignment=Assignment.from_dict(data["best_assignment"]),
            j_ub_best=float(data["j_ub_best"]),
            branches_explored=int(data["branches_explored"]),
            proven_optimal=bool(data["proven_optimal"]),
            ub_trace=[(int(k), float(j)) for k, j in data["ub_trace"]],
            pruned=int(data.get("pruned", 0)),
            k_best=int(data.get("k_best", 1)),
            stop_reason=data.get("stop_reason", "exhausted"),
        )


@dataclass(slots=True)
class Node:
    """Search-tree node with the incremental state needed by both bounds."""

    delta: tuple[int, ...]
    beta: tuple[int, ...]
    p: int
    last: tuple[int, ...]  # previous intercepted attacker per defender (0-based, -1 none)
    finish: tuple[float, ...]  # t_d(m_d) per defender
    gamma: int
    free: tuple[int, ...]  # unassigned attackers, 0-based ascending
    ub: float | None = None
    completion: list | None = None

    @classmethod
    def root(cls, n: int, m: int) -> "Node":
        return cls((0,) * m, (0,) * m, 0, (-1,) * n, (0.0,) * n, 0, tuple(range(m)))

    @property
    def first_eligible(self) -> int:
        """0-based index of ``delta(p)`` (0 at the root)."""
        return self.delta[self.p - 1] - 1 if self.p else 0

    @property
    def assignment(self) -> Assignment:
        return Assignment(self.delta, self.beta)

    def child(self, d: int, a: int, prim: Primitive) -> "Node":
        t = self.finish[d]
        dt = prim(d, self.last[d], a, t)
        p = self.p
        delta = self.delta[:p] + (d + 1,) + self.delta[p + 1:]
        beta = self.beta[:p] + (a + 1,) + self.beta[p + 1:]
        free = tuple(x for x in self.free if x != a)
        if math.isinf(dt):
            return Node(delta, beta, p + 1, self.last, self.finish, self.gamma + 1, free)
        last = self.last[:d] + (a,) + self.last[d + 1:]
        finish = self.finish[:d] + (t + dt,) + self.finish[d + 1:]
        return Node(delta, beta, p + 1, last, finish, self.gamma, free)

    def children(self, n: int, prim: Primitive) -> list["Node"]:
        return [self.child(d, a, prim) for d in range(self.first_eligible, n) for a in self.free]

    def cost(self, epsilon: float) -> float:
        return self.gamma + epsilon * max(self.finish, default=0.0)


def node_from_assignment(a: Assignment, n: int, prim: Primitive) -> Node:
    node = Node.root(n, a.m)
    for d, j in zip(a.delta, a.beta):
        if d == 0:
            break
        if d > n:
            raise ValidationError(f"defender {d} out of range for n={n}")
        node = node.child(d - 1, j - 1, prim)
    return node


def greedy_completion(node: Node, n: int, prim: Primitive, epsilon: float) -> tuple[float, list]:
    """Greedy upper bound from ``node``.

    Repeatedly commits the (defender, attacker) pair with the earliest
    completion time ``t_d(m_d) + dt_int``; ties go to the lowest defender,
    then the lowest attacker.  When nothing left can be intercepted the
    remainder is appended to the first eligible defender, where each of
    them evaluates as unreachable.  Returns the cost and the appended
    ``(defender, attacker)`` pairs, 0-based.
    """
    d0 = node.first_eligible
    last = list(node.last)
    finish = list(node.finish)
    free = list(node.free)
    rows = {d: {a: finish[d] + prim(d, last[d], a, finish[d]) for a in free} for d in range(d0, n)}
    appended = []
    while free:
        best_c, best_d, best_a = INF, -1, -1
        for d in range(d0, n):
            row = rows[d]
            for a in free:
                c = row[a]
                if c < best_c:
                    best_c, best_d, best_a = c, d, a
        if best_d < 0:
            break
        appended.append((best_d, best_a))
        free.remove(best_a)
        finish[best_d] = best_c
        last[best_d] = best_a
        row = rows[best_d]
        for a in free:
            row[a] = best_c + prim(best_d, best_a, a, best_c)
    for a in free:
        appended.append((d0, a))
    cost = node.gamma + len(free) + epsilon * max(finish, default=0.0)
    return cost, appended


def simultaneous_bound(node: Node, n: int, prim: Primitive, epsilon: float) -> float:
    """Lower bound letting each defender chase every remaining attacker at once.

    The time term is the larger of every defender's committed finish time
    and the earliest possible intercept of each attacker still catchable.
    """
    if not node.free:
        return node.cost(epsilon)
    d0 = node.first_eligible
    gamma = node.gamma
    latest = max(node.finish)
    for a in node.free:
        earliest = INF
        for d in range(d0, n):
            t = node.finish[d]
            c = t + prim(d, node.last[d], a, t)
            if c < earliest:
                earliest = c
        if math.isinf(earliest):
            gamma += 1
        elif earliest > latest:
            latest = earliest
    return gamma + epsilon * latest


def _complete(node: Node, appended: Sequence[tuple[int, int]], n: int) -> Assignment:
    seqs = to_sequences(node.assignment, n)
    for d, a in appended:
        seqs[d].append(a + 1)
    return from_sequences(seqs, len(node.delta))


def _primitive_for(instance: InstanceSpec, primitive: Primitive | None) -> Primitive:
    return primitive if primitive is not None else instance.table()


def upper_bound(partial: Assignment, instance: InstanceSpec, primitive: Primitive | None = None,
                epsilon: float | None = None) -> tuple[Assignment, float]:
    prim = _primitive_for(instance, primitive)
    eps = instance.epsilon if epsilon is None else epsilon
    node = node_from_assignment(partial, instance.n, prim)
    cost, appended = greedy_completion(node, instance.n, prim, eps)
    return _complete(node, appended, instance.n), cost


def lower_bound(partial: Assignment, instance: InstanceSpec, primitive: Primitive | None = None,
                epsilon: float | None = None) -> float:
    prim = _primitive_for(instance, primitive)
    eps = instance.epsilon if epsilon is None else epsilon
    node = node_from_assignment(partial, instance.n, prim)
    return simultaneous_bound(node, instance.n, prim, eps)


class Frontier:
    """Open list for the four branching strategies.

    Breadth-first variants queue children at the back, depth-first ones
    stack them so the first child comes out next.  The A* variants sort
    each sibling group by the branching function before insertion, with
    ties kept in expansion order.
    """

    def __init__(self, strategy: Strategy | str):
        self.strategy = Strategy(strategy)
        self._items: deque = deque()

    def __len__(self) -> int:
        return len(self._items)

    def push(self, children: Iterable, bound_fn: Callable | None = None) -> None:
        children = list(children)
        if self.strategy.sorted_children:
            if bound_fn is None:
                raise ValueError("A* branching needs a bound function")
            keyed = [(bound_fn(c), i) for i, c in enumerate(children)]
            keyed.sort()
            children = [children[i] for _, i in keyed]
        if self.strategy.depth_first:
            self._items.extend(reversed(children))
        else:
            self._items.extend(children)

    def pop(self):
        if self.strategy.depth_first:
            return self._items.pop()
        return self._items.popleft()


def branch_order(root, children_of: Callable, strategy: Strategy | str,
                 bound_fn: Callable | None = None) -> list:
    """Order in which a full, unpruned traversal selects the nodes of a tree."""
    frontier = Frontier(strategy)
    order = [root]
    frontier.push(children_of(root), bound_fn)
    while frontier:
        node = frontier.pop()
        order.append(node)
        frontier.push(children_of(node), bound_fn)
    return order


def solve(instance: InstanceSpec, config: SolverConfig | None = None,
          primitive: Primitive | None = None,
          on_node: Callable[[Assignment, float, float | None], None] | None = None) -> SolverResult:
    """Run branch and bound until the tree is exhausted or a budget runs out."""
    config = config or SolverConfig()
    n, m = instance.n, instance.m
    if n < 1:
        raise ValidationError("at least one defender is required")
    prim = _primitive_for(instance, primitive)
    eps = instance.epsilon if config.epsilon is None else config.epsilon
    started = time.perf_counter()
    deadline = None if config.time_budget is None else started + config.time_budget
    k_max = config.k_max

    root = Node.root(n, m)
    best, appended = greedy_completion(root, n, prim, eps)
    best_node, best_tail = root, appended
    k = k_best = 1
    trace = [(1, best)]
    pruned = 0

    def finish(proven: bool, reason: str) -> SolverResult:
        return SolverResult(_complete(best_node, best_tail, n), best, k, proven, trace, pruned,
                            k_best, reason, getattr(prim, "calls", 0))

    def threshold() -> float:
        return best if config.cutoff is None else min(best, config.cutoff)

    if on_node is not None:
        on_node(root.assignment, best, None)
    if m == 0 or best <= 0.0:
        return finish(True, "exhausted" if m == 0 else "zero_cost")
    if config.cutoff is not None and simultaneous_bound(root, n, prim, eps) >= threshold():
        return finish(True, "root_bound")

    def node_ub(node: Node) -> float:
        if node.ub is None:
            node.ub, node.completion = greedy_completion(node, n, prim, eps)
        return node.ub

    frontier = Frontier(config.strategy)
    frontier.push(root.children(n, prim), node_ub)
    while frontier:
        if k_max is not None and k >= k_max:
            return finish(False, "k_max")
        if deadline is not None and time.perf_counter() >= deadline:
            return finish(False, "time_budget")
        node = frontier.pop()
        k += 1
        j_ub = node_ub(node)
        if j_ub < best:
            best, best_node, best_tail, k_best = j_ub, node, node.completion, k
            trace.append((k, best))
        node.completion = None
        if best <= 0.0:
            return finish(True, "zero_cost")
        j_lb = simultaneous_bound(node, n, prim, eps)
        if on_node is not None:
            on_node(node.assignment, j_ub, j_lb)
        if config.prune and j_lb >= threshold():
            pruned += 1
            continue
        if node.p < m:
            frontier.push(node.children(n, prim), node_ub)
    return finish(True, "exhausted")
