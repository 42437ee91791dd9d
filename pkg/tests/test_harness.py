import json
from dataclasses import replace

import numpy as np
import pytest
from pytest import raises

from ascg.errors import InvalidConfig
from ascg.harness import (
    COMPARE_COLUMNS,
    Problem,
    RunConfig,
    compare,
    compare_table,
    default_runs,
    format_table,
    generate_l1ls,
    l1ls_problem,
    load_problem,
    random_quadratic_problem,
    save_problem,
    trace_summary,
)
from ascg.polyhedron import LiftedL1Box
from ascg.solver import SolverConfig, ascg_run, cg_run


def test_l1ls_without_penalty_recovers_c():
    c = np.array([0.5, -0.25, 0.1])
    problem = l1ls_problem(np.eye(3), c, 0.0)
    assert problem.polytope == LiftedL1Box(3)
    assert problem.objective.b.tolist() == [0.0, 0.0, 0.0, 0.0]

    cfg = SolverConfig(gap_tolerance=1e-9, max_iters=5000)
    trace = ascg_run(problem.objective, problem.polytope, cfg)
    assert trace.converged
    assert np.allclose(trace.point[:3], c, atol=1e-4)


def test_l1ls_large_penalty_gives_zero():
    problem = l1ls_problem(np.eye(2), [0.5, -0.25], 10.0)
    cfg = SolverConfig(gap_tolerance=1e-10)
    trace = ascg_run(problem.objective, problem.polytope, cfg)
    assert trace.converged
    assert np.allclose(trace.point, 0.0, atol=1e-6)


def test_l1ls_objective_value():
    B = np.array([[1.0, 2.0], [0.0, 1.0]])
    c = np.array([1.0, 1.0])
    problem = l1ls_problem(B, c, 0.5)
    x = np.array([0.5, -0.5])
    point = np.append(x, np.abs(x).sum())
    expected = float(np.sum((B @ x - c) ** 2) + 0.5 * np.abs(x).sum())
    assert problem.objective.value(point) == pytest.approx(expected)


def test_l1ls_checks():
    with raises(InvalidConfig):
        l1ls_problem(np.eye(2), [0.0, 0.0], -1.0)

    with raises(InvalidConfig):
        generate_l1ls(0, 3, 0.1)


def test_generate_l1ls():
    problem = generate_l1ls(10, 20, 0.1, seed=42)
    assert problem.objective.E.shape == (10, 21)
    assert problem.objective.b[-1] == 0.1
    assert problem.polytope == LiftedL1Box(20)
    assert problem.meta["seed"] == 42

    again = generate_l1ls(10, 20, 0.1, seed=42)
    assert np.array_equal(problem.objective.E, again.objective.E)
    other = generate_l1ls(10, 20, 0.1, seed=43)
    assert not np.array_equal(problem.objective.E, other.objective.E)


def test_l1ls_rate_observation():
    problem = generate_l1ls(10, 20, 0.1, seed=42)
    obj, p = problem.objective, problem.polytope
    budget = SolverConfig(max_iters=5000, gap_tolerance=1e-8)

    exact = ascg_run(obj, p, replace(budget, stepsize="exact"))
    adaptive = ascg_run(obj, p, budget)
    cg = cg_run(obj, p, replace(budget, stepsize="exact"))

    # f(x) - gap(x) <= f* for convex f
    f_low = exact.final.f_value - exact.final.fw_gap
    tail = adaptive.f_values[len(adaptive.f_values) // 5 :]
    slope = np.polyfit(np.arange(len(tail)), np.log(tail - f_low), 1)[0]
    assert slope < 0

    assert exact.final.fw_gap < 1e-6
    assert exact.final.fw_gap < cg.final.fw_gap
    assert exact.final.f_value <= cg.final.f_value + 1e-12


@pytest.mark.parametrize("kind", ["simplex", "box", "l1_ball"])
def test_random_quadratic_problem(kind):
    problem = random_quadratic_problem(kind, 4, seed=1)
    assert problem.polytope.n == 4
    assert np.linalg.matrix_rank(problem.objective.E) == 4
    assert problem.meta["kind"] == kind

    with raises(InvalidConfig):
        random_quadratic_problem("sphere", 4)


def test_problem_files(tmp_path):
    problem = generate_l1ls(3, 4, 0.2, seed=1)
    path = str(tmp_path / "problem.json")
    save_problem(problem, path)

    with open(path) as f:
        data = json.load(f)
    assert data["polytope"]["kind"] == "lifted_l1_box"
    assert "A" in data["polytope"]

    back = load_problem(path)
    assert back.polytope == problem.polytope
    assert np.array_equal(back.objective.E, problem.objective.E)
    assert back.meta == problem.meta

    large = Problem.from_dict(generate_l1ls(2, 13, 0.1).to_dict())
    assert "A" not in generate_l1ls(2, 13, 0.1).to_dict()["polytope"]
    assert large.polytope == LiftedL1Box(13)


def test_default_runs():
    runs = default_runs(SolverConfig(max_iters=10))
    assert [r.label for r in runs] == [
        "ascg-exact-trivial",
        "ascg-exact-caratheodory",
        "ascg-adaptive-trivial",
        "ascg-adaptive-caratheodory",
        "cg-exact",
        "cg-adaptive",
    ]
    assert all(r.config.max_iters == 10 for r in runs)

    with raises(InvalidConfig):
        RunConfig("x", algorithm="pgd")


def test_compare():
    problem = random_quadratic_problem("box", 3, seed=1)
    runs = default_runs(SolverConfig(max_iters=2000))
    rows = compare(problem, runs)

    assert [r.label for r in rows] == [r.label for r in runs]
    assert all(r.error is None for r in rows)
    assert all(r.max_repr is None for r in rows if r.algorithm == "cg")

    ascg_f = [r.final_f for r in rows if r.algorithm == "ascg"]
    assert max(ascg_f) - min(ascg_f) < 1e-5

    parallel = compare(problem, runs, jobs=2)
    assert [r.as_dict() for r in parallel] == [r.as_dict() for r in rows]

    table = compare_table(rows)
    assert table.splitlines()[0].split() == list(COMPARE_COLUMNS)
    assert len(table.splitlines()) == len(rows) + 2


def test_compare_reports_failures(monkeypatch):
    problem = random_quadratic_problem("box", 2, seed=0)

    def fail(self, problem):
        raise InvalidConfig("no luck")

    monkeypatch.setattr(RunConfig, "run", fail)
    (row,) = compare(problem, [RunConfig("broken")])
    assert row.error == "InvalidConfig: no luck"
    assert row.final_f is None


def test_compare_propagates_other_errors():
    problem = random_quadratic_problem("box", 2, seed=0)
    broken = RunConfig("bad-start", config=SolverConfig(start_vertex_id=99))
    with raises(IndexError):
        compare(problem, [broken])


def test_format_table():
    text = format_table([{"a": 1, "b": None}, {"a": 2.5, "b": "xyz"}])
    assert text.splitlines() == ["a    b  ", "---  ---", "1    -  ", "2.5  xyz"]
    assert format_table([]) == ""


def test_trace_summary():
    problem = random_quadratic_problem("simplex", 3, seed=0)
    trace = ascg_run(problem.objective, problem.polytope)
    summary = trace_summary(trace)
    assert summary["algorithm"] == "ascg"
    assert summary["iterations"] == trace.iterations
    assert len(summary["point"]) == 3
    json.dumps(summary)
