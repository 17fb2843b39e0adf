import json
import math
import subprocess
import sys
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roboflag import io as rio
from roboflag.cli import BENCH_HEADER, PHASE_HEADER, SIM_HEADER, main
from roboflag.instances import GenParams, generate
from roboflag.solver import SolverConfig, solve, upper_bound
from roboflag.assignment import Assignment


def _run(*argv):
    return main([str(a) for a in argv])


def test_gen_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert _run("gen", "--n", 3, "--m", 5, "--seed", 7, "--out", a) == 0
    assert _run("gen", "--n", 3, "--m", 5, "--seed", 7, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert rio.load_instance(a).to_dict() == generate(GenParams(n=3, m=5), 7).to_dict()
    assert rio.manifest_path(a).exists()


def test_gen_without_attackers(tmp_path):
    out = tmp_path / "i.json"
    assert _run("gen", "--n", 2, "--m", 0, "--out", out) == 0
    assert rio.load_instance(out).m == 0


def test_solve_trivial_is_proven(tmp_path):
    inst, res = tmp_path / "i.json", tmp_path / "r.json"
    _run("gen", "--n", 1, "--m", 1, "--seed", 3, "--out", inst)
    assert _run("solve", "--instance", inst, "--out", res) == 0
    assert rio.load_result(res).proven_optimal


def test_solve_kmax_one_is_greedy(tmp_path):
    inst, res = tmp_path / "i.json", tmp_path / "r.json"
    _run("gen", "--n", 3, "--m", 5, "--seed", 4, "--out", inst)
    assert _run("solve", "--instance", inst, "--kmax", 1, "--out", res) == 0
    spec = rio.load_instance(inst)
    assert rio.load_result(res).j_ub_best == upper_bound(Assignment.empty(5), spec)[1]


def test_solve_budget(tmp_path):
    inst, res = tmp_path / "i.json", tmp_path / "r.json"
    _run("gen", "--n", 3, "--m", 6, "--seed", 5, "--out", inst)
    t0 = time.perf_counter()
    assert _run("solve", "--instance", inst, "--strategy", "bfs", "--budget-ms", 50, "--out", res) == 0
    assert time.perf_counter() - t0 < 1.0
    assert rio.load_result(res).best_assignment.complete


def test_bench_rows_and_traces(tmp_path):
    out = tmp_path / "b.csv"
    assert _run("bench", "--n", 2, "--m", 3, "--count", 5, "--seed", 1, "--out", out) == 0
    rows = rio.read_csv(out)
    assert list(rows[0]) == BENCH_HEADER and len(rows) == 5
    for row in rows:
        trace = rio.parse_trace(row["ub_trace"])
        js = [j for _, j in trace]
        assert all(b <= a for a, b in zip(js, js[1:]))
        assert float(row["j_best"]) == js[-1]
    again = solve(generate(GenParams(n=2, m=3), (1, 2)), SolverConfig())
    assert float(rows[2]["j_best"]) == again.j_ub_best


def test_phase_writes_one_row_per_point(tmp_path):
    out = tmp_path / "p.csv"
    assert _run("phase", "--axis", "velocity-ratio", "--from", 0.25, "--to", 4, "--points", 12,
                "--per-point", 2, "--n", 2, "--m", 3, "--out", out) == 0
    rows = rio.read_csv(out)
    assert len(rows) == 12 and list(rows[0]) == PHASE_HEADER
    manifest = rio.read_json(rio.manifest_path(out))
    assert manifest["status"] == "ok" and manifest["seed"] == 0


def test_sim_and_compare(tmp_path, capsys):
    base, treat, events = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "e.jsonl"
    common = ["--seeds", 3, "--t-end", 10, "--n", 4, "--m", 2]
    assert _run("sim", "--rta-div", 0, *common, "--out", base) == 0
    assert _run("sim", "--rta-div", 15, *common, "--events", events, "--out", treat) == 0
    rows = rio.read_csv(treat)
    assert list(rows[0]) == SIM_HEADER and [r["seed"] for r in rows] == ["0:0", "0:1", "0:2"]
    lines = [json.loads(line) for line in events.read_text().splitlines()]
    assert {e["kind"] for e in lines} >= {"assign"}
    assert _run("compare", base, treat) == 0
    assert "mean_diff=" in capsys.readouterr().out


def test_exit_codes(tmp_path):
    assert _run("solve", "--instance", tmp_path / "missing.json", "--out", tmp_path / "r.json") == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run("solve", "--instance", bad, "--out", tmp_path / "r.json") == 3
    assert _run("solve", "--instance", bad, "--strategy", "random", "--out", "x") == 2
    assert _run("gen", "--r-a", "1", "--out", tmp_path / "x.json") == 2
    assert _run("gen", "--r-a", "1,20", "--out", tmp_path / "x.json") == 2
    assert _run("--help") == 0


def test_console_entry_point(tmp_path):
    out = tmp_path / "i.json"
    proc = subprocess.run([sys.executable, "-m", "roboflag", "gen", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()


def test_manifest_fields(tmp_path):
    out = tmp_path / "i.json"
    _run("gen", "--seed", 9, "--out", out)
    m = rio.read_json(rio.manifest_path(out))
    for key in ("command", "seed", "config", "version", "generator", "started_at", "finished_at",
                "wall_seconds", "status"):
        assert key in m
    assert m["started_at"] <= m["finished_at"]


def test_atomic_write_leaves_no_temp_files(tmp_path):
    rio.write_json(tmp_path / "x.json", {"a": 1})
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]


def test_non_finite_json_rejected(tmp_path):
    with pytest.raises(ValueError):
        rio.dumps({"x": math.nan})


@given(st.lists(st.tuples(st.integers(1, 10**6), st.floats(allow_nan=False, allow_infinity=False))))
def test_trace_round_trip(trace):
    assert rio.parse_trace(rio.format_trace(trace)) == trace


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_float_round_trip(x):
    text = rio.csv_text(["v"], [{"v": x}])
    assert float(text.splitlines()[1]) == x
