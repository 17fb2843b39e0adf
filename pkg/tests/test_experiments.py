import math

import numpy as np
import pytest

from roboflag.dynamics import AttackerTrack, DefenderState, ValidationError
from roboflag.experiments import (ComplexityStudy, PhasePoint, crossing_point, percent_difference,
                                  phase_grid, point_params, rdd_decide, run_complexity_study,
                                  run_convergence_study, run_instances, run_phase_transition)
from roboflag.instances import GenParams, InstanceSpec
from roboflag.intercept import FieldConfig
from roboflag.solver import SolverConfig


def test_percent_difference_examples():
    assert percent_difference([1.33], 1.0)[0] == pytest.approx(33.0)
    assert percent_difference([1.0], 1.0)[0] == 0.0
    assert percent_difference([2.0], 1.0)[0] == 100.0
    with pytest.raises(ValueError):
        percent_difference([1.0], 0.0)


def test_complexity_cdf_shape():
    study = run_complexity_study(2, 3, 0.01, count=5, seed=1)
    xs, frac = study.cdf("branches")
    assert np.all(np.diff(xs) >= 0) and np.all(np.diff(frac) > 0)
    assert frac[-1] == study.fraction_solved == 1.0
    one = run_complexity_study(2, 3, 0.01, count=1, seed=1)
    assert len(one.cdf()[0]) == 1
    with pytest.raises(ValidationError):
        run_instances(GenParams(), SolverConfig(), count=0)


def test_time_weight_makes_search_harder():
    # the epsilon = 0 search is cheaper on matched seeds (trend, not per instance)
    easy = run_complexity_study(3, 5, 0.0, count=100, seed=3)
    hard = run_complexity_study(3, 5, 0.01, count=100, seed=3)
    assert np.mean([r.branches for r in easy.runs]) < np.mean([r.branches for r in hard.runs])
    assert np.median([r.branches for r in easy.runs]) <= np.median([r.branches for r in hard.runs])


def test_convergence_small():
    stats = run_convergence_study(2, 4, 0.01, count=30, seed=2, k_curve=10)
    assert stats.instances + stats.excluded == 30
    firsts = {s: v[0] for s, v in stats.pd.items()}
    assert len(set(np.round(list(firsts.values()), 12))) == 1
    for curve in stats.pd.values():
        assert np.all(np.diff(curve) <= 1e-12)
        assert curve[-1] >= -1e-9


def test_rdd_trivial_yes():
    inst = InstanceSpec(FieldConfig(), [DefenderState(10.5, 0.0)],
                        [AttackerTrack(11.0, 0.0, -0.1, 0.0)], epsilon=0.0)
    assert rdd_decide(inst)[0] == "yes"


def test_rdd_trivial_no():
    attackers = [AttackerTrack(2.2 * math.cos(t), 2.2 * math.sin(t), -math.cos(t), -math.sin(t))
                 for t in (0.5, 2.5, 4.5)]
    inst = InstanceSpec(FieldConfig(), [DefenderState(-4.0, 0.0)], attackers, epsilon=0.0)
    assert rdd_decide(inst)[0] == "no"


def test_slow_attackers_are_mostly_yes():
    pts = run_phase_transition("velocity_ratio", [0.25], 30, seed=4)
    assert pts[0].fraction_yes >= 0.9


def test_phase_grid():
    assert phase_grid(0.25, 4.0, 5) == pytest.approx([0.25, 0.5, 1.0, 2.0, 4.0])
    assert phase_grid(1, 2, 3, "linear") == [1.0, 1.5, 2.0]
    with pytest.raises(ValidationError):
        phase_grid(1, 2, 0)


def test_point_params():
    p = point_params("team_ratio", 0.4, 3, 10, GenParams())
    assert (p.n, p.m, p.v_a_range) == (4, 10, (1.0, 1.0))
    q = point_params("velocity_ratio", 2.0, 3, 5, GenParams())
    assert q.v_a_range == (2.0, 2.0) and q.epsilon == 0.0
    with pytest.raises(ValidationError):
        point_params("mass_ratio", 1.0, 3, 5, GenParams())


def test_crossing_point_interpolates():
    pts = [PhasePoint(0.5, 0.2, 1, 10), PhasePoint(1.0, 0.8, 1, 10)]
    assert crossing_point(pts) == pytest.approx(0.75)
    assert math.isnan(crossing_point([PhasePoint(1.0, 0.9, 1, 10)]))


def test_parallel_results_match_serial():
    a = run_instances(GenParams(n=2, m=3), SolverConfig(), count=4, seed=9, threads=1)
    b = run_instances(GenParams(n=2, m=3), SolverConfig(), count=4, seed=9, threads=2)
    assert [r.j_best for r in a] == [r.j_best for r in b]
    assert isinstance(ComplexityStudy(a).fraction_solved, float)
