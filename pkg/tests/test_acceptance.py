"""The ten acceptance criteria, each at its stated size and tolerance.

Every test records a one-line verdict that is printed in the terminal
summary under "acceptance criteria".
"""
import math
from itertools import product

import numpy as np
import pytest

from oracles import int_time_scan, min_time_grid
from roboflag import io as rio
from roboflag.assignment import Assignment, child_count, count_complete_assignments, evaluate, expand_node
from roboflag.cli import main
from roboflag.experiments import (crossing_point, phase_grid, run_convergence_study,
                                  run_phase_transition)
from roboflag.instances import GenParams, generate
from roboflag.intercept import FieldConfig, int_time, min_time_to_point_1d
from roboflag.sim import SimConfig, bootstrap_lower_bound, run_sim_batch
from roboflag.solver import SolverConfig, Strategy, branch_order, solve, upper_bound

from test_solver import J_UB, ORDERS, TREE


def _leaves(node, n):
    if node.complete:
        yield node
        return
    for child in expand_node(node, n):
        yield from _leaves(child, n)


def _subtree_optima(root, n, prim, eps):
    """Minimum leaf cost below every node of the tree, keyed by assignment."""
    best = {}

    def visit(node):
        if node.complete:
            j = evaluate(node, n, prim, eps).cost
        else:
            j = min(visit(c) for c in expand_node(node, n))
        best[node] = j
        return j

    visit(root)
    return best


# 1 ---------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence(criterion):
    worst, total = 0.0, 0
    for n, m in [(1, 3), (2, 2), (2, 3), (2, 4)]:
        expected_leaves = math.factorial(n + m - 1) // math.factorial(n - 1)
        for i in range(100):
            inst = generate(GenParams(n=n, m=m), (1, n, m, i))
            prim = inst.table()
            leaves = list(_leaves(Assignment.empty(m), n))
            assert len(leaves) == expected_leaves
            j_enum = min(evaluate(a, n, prim, inst.epsilon).cost for a in leaves)
            res = solve(inst, SolverConfig(k_max=None), primitive=prim)
            assert res.proven_optimal
            worst = max(worst, abs(res.j_ub_best - j_enum))
            total += 1
    criterion(1, worst <= 1e-9, f"{total} instances, max |J - J_enum| = {worst:.2e}")


# 2 ---------------------------------------------------------------------------

def test_criterion_2_tree_combinatorics(criterion):
    checked = 0
    for n, m in product(range(1, 4), range(0, 5)):
        root = Assignment.empty(m)
        if m:
            assert len(expand_node(root, n)) == n * m
        leaves, stack = set(), [root]
        while stack:
            node = stack.pop()
            if node.complete:
                leaves.add(node)
                continue
            kids = expand_node(node, n)
            last = max(node.delta[:node.p], default=1)
            assert len(kids) == child_count(node, n) == (n - last + 1) * (m - node.p)
            stack.extend(kids)
        assert len(leaves) == count_complete_assignments(n, m)
        checked += 1
    criterion(2, True, f"leaf counts and child formula hold for {checked} (n, m) pairs")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_worked_expansion(criterion):
    parent = Assignment((1, 1, 2, 2, 2, 0, 0), (4, 1, 2, 5, 7, 0, 0))
    kids = expand_node(parent, 2)
    expected = [Assignment((1, 1, 2, 2, 2, 2, 0), (4, 1, 2, 5, 7, 3, 0)),
                Assignment((1, 1, 2, 2, 2, 2, 0), (4, 1, 2, 5, 7, 6, 0))]
    criterion(3, kids == expected, f"children {[k.beta for k in kids]}")


# 4 ---------------------------------------------------------------------------

def test_criterion_4_branching_orders(criterion):
    got = {s: branch_order(0, lambda i: TREE.get(i, []), s, J_UB.get) for s in Strategy}
    criterion(4, got == ORDERS, ", ".join(f"{s.value}={got[s]}" for s in Strategy))


# 5 ---------------------------------------------------------------------------

def test_criterion_5_bound_sandwich(criterion):
    sizes = [(1, 3), (2, 2), (2, 3), (3, 3), (2, 4), (3, 4)]
    nodes, violations = 0, []
    for i in range(200):
        n, m = sizes[i % len(sizes)]
        inst = generate(GenParams(n=n, m=m), (5, i))
        prim = inst.table()
        optima = _subtree_optima(Assignment.empty(m), n, prim, inst.epsilon)

        def check(a, j_ub, j_lb):
            nonlocal nodes
            nodes += 1
            j_opt = optima[a]
            if j_ub < j_opt - 1e-9 or (j_lb is not None and j_lb > j_opt + 1e-9):
                violations.append((i, a, j_lb, j_opt, j_ub))

        strategy = list(Strategy)[i % 4]
        solve(inst, SolverConfig(strategy=strategy), primitive=prim, on_node=check)
    criterion(5, not violations and nodes > 200,
              f"{nodes} explored nodes on 200 instances, {len(violations)} violations")


# 6 ---------------------------------------------------------------------------

def test_criterion_6_anytime(criterion):
    stats = run_convergence_study(3, 5, 0.01, count=400, seed=6, k_curve=50,
                                  strategies=list(Strategy))
    pd = stats.pd
    monotone = all(np.all(np.diff(c) <= 1e-12) for c in pd.values())
    agree = len({round(float(c[0]), 9) for c in pd.values()}) == 1
    astar = pd[Strategy.ASTAR_BFS.value]
    ordered = astar[0] > astar[1]

    inst = generate(GenParams(n=3, m=5), (6, 0))
    greedy = upper_bound(Assignment.empty(5), inst)[1]
    k1 = solve(inst, SolverConfig(k_max=1)).j_ub_best == greedy
    traces_ok = True
    for i in range(50):
        res = solve(generate(GenParams(n=3, m=5), (6, 1, i)), SolverConfig(strategy=list(Strategy)[i % 4]))
        js = [j for _, j in res.ub_trace]
        traces_ok &= all(b <= a for a, b in zip(js, js[1:]))
    detail = (f"{stats.instances} instances ({stats.excluded} excluded); PD(1)={astar[0]:.2f}% "
              f"PD(2)={astar[1]:.2f}% (A*); k=1 agreement={agree}; PD nonincreasing={monotone}; "
              f"kmax=1 is greedy={k1}; traces nonincreasing={traces_ok}")
    criterion(6, monotone and agree and ordered and k1 and traces_ok and stats.instances >= 400,
              detail)


# 7 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_phase_transitions(criterion):
    grid = phase_grid(0.25, 4.0, 12)
    vel = run_phase_transition("velocity_ratio", grid, 100, n=3, m=5, seed=7)
    peak = vel[int(np.argmax([p.mean_branches for p in vel]))].control
    m = 6
    team = run_phase_transition("team_ratio", [k / m for k in range(1, m + 1)], 100, m=m, seed=8)
    cross = crossing_point(team)
    ok = (vel[0].fraction_yes >= 0.9 and vel[-1].fraction_yes <= 0.1 and 0.5 <= peak <= 2.0
          and 0.4 <= cross <= 0.9)
    criterion(7, ok, f"velocity: yes(0.25)={vel[0].fraction_yes:.2f} yes(4)={vel[-1].fraction_yes:.2f} "
                     f"branch peak at {peak:.2f}; team: crossing at n/m={cross:.3f}")


# 8 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_replanning_benefit(criterion):
    fixed = run_sim_batch(SimConfig.with_divisor(0), seeds=200, n=8, m=4)
    replan = run_sim_batch(SimConfig.with_divisor(15), seeds=200, n=8, m=4)
    a = np.array([o.fraction_entered for o in fixed])
    b = np.array([o.fraction_entered for o in replan])
    diffs = a - b
    lb = bootstrap_lower_bound(diffs, 0.95)
    criterion(8, diffs.mean() >= 0.10 and lb >= 0.10,
              f"entered {a.mean():.3f} (no replanning) vs {b.mean():.3f} (rate_tc/15); "
              f"diff {diffs.mean():.3f}, 95% one-sided bootstrap bound {lb:.3f}")


# 9 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_primitive_correctness(criterion):
    field = FieldConfig(R_dz=2.0)
    worst, finite, boundary = 0.0, 0, 0
    mismatches = []
    for i in range(1000):
        inst = generate(GenParams(n=1, m=1, v_a_range=(0.3, 2.0)), (9, i))
        d, a = inst.defenders[0], inst.attackers[0]
        t0 = 0.5 * (i % 4)
        got = int_time(d, a, t0, field).delta_t
        ref = int_time_scan(d, a, t0, 2.0)
        if math.isinf(got) != math.isinf(ref):
            mismatches.append((i, got, ref))
            continue
        if math.isfinite(got):
            finite += 1
            worst = max(worst, abs(got - ref))
    rng = np.random.default_rng(9)
    worst_1d = 0.0
    for x, v in zip(rng.uniform(-20, 20, 25), rng.uniform(-1.2, 1.2, 25)):
        worst_1d = max(worst_1d, abs(min_time_to_point_1d(x, v) - min_time_grid(x, v)))
    ok = not mismatches and worst <= 5e-4 and worst_1d <= 1e-4
    criterion(9, ok, f"1000 pairs ({finite} finite, {len(mismatches)} finiteness mismatches), "
                     f"max int_time error {worst:.2e}; 1-D max error {worst_1d:.2e}")


# 10 --------------------------------------------------------------------------

def _strip(manifest: dict) -> dict:
    return {k: v for k, v in manifest.items() if k not in rio.VOLATILE_MANIFEST_KEYS}


def test_criterion_10_determinism(tmp_path, capsys, criterion):
    def commands(d):
        inst = d / "inst.json"
        return [
            ["gen", "--n", 3, "--m", 5, "--seed", 10, "--out", inst],
            ["solve", "--instance", inst, "--out", d / "res.json"],
            ["bench", "--n", 2, "--m", 3, "--count", 6, "--seed", 10, "--out", d / "bench.csv"],
            ["converge", "--n", 2, "--m", 3, "--count", 6, "--kcurve", 5, "--seed", 10,
             "--out", d / "conv.csv"],
            ["phase", "--axis", "team-ratio", "--from", 0.2, "--to", 1, "--points", 3,
             "--per-point", 3, "--m", 5, "--seed", 10, "--out", d / "phase.csv"],
            ["sim", "--rta-div", 15, "--seeds", 2, "--t-end", 8, "--seed", 10,
             "--events", d / "events.jsonl", "--out", d / "sim.csv"],
        ]

    runs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        stdout = []
        for argv in commands(d):
            assert main([str(x) for x in argv]) == 0, argv
            stdout.append(capsys.readouterr().out)
        assert main(["compare", str(d / "sim.csv"), str(d / "sim.csv")]) == 0
        stdout.append(capsys.readouterr().out)
        runs.append((d, stdout))

    (da, out_a), (db, out_b) = runs
    names = sorted(p.name for p in da.iterdir())
    differing = []
    for name in names:
        pa, pb = da / name, db / name
        if name.endswith(".manifest.json"):
            ma, mb = _strip(rio.read_json(pa)), _strip(rio.read_json(pb))
            # paths differ only by the run directory
            same = rio.dumps(ma).replace(str(da), "") == rio.dumps(mb).replace(str(db), "")
        else:
            same = pa.read_bytes() == pb.read_bytes()
        if not same:
            differing.append(name)
    ok = not differing and out_a == out_b and names == sorted(p.name for p in db.iterdir())
    criterion(10, ok, f"{len(names)} files compared across 7 commands, differing: {differing or 'none'}")
