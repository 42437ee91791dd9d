import io
from dataclasses import replace

import numpy as np
import pytest
from pytest import raises

from ascg.errors import (
    AscentDirection,
    InvalidConfig,
    InvalidRepresentation,
    SingletonAway,
    ZeroDirection,
)
from ascg.objective import CallableFunction, CompositeObjective, QuadraticFunction
from ascg.harness import random_quadratic_problem
from ascg.polyhedron import Box, Simplex
from ascg.solver import (
    CSV_HEADER,
    Reduction,
    Representation,
    SolverConfig,
    StepRecord,
    Stepsize,
    StepType,
    _away_weights,
    _forward_weights,
    ascg_run,
    away_bound,
    ascg_step,
    cg_run,
    cg_step,
    check_active_sets,
    check_trace_invariants,
    read_trace_csv,
    stepsize,
)

from .conftest import distance_objective


def representation(p, weights):
    """Build a representation from ``{vertex id: weight}``."""
    entries = {i: (p.vertex(i), w) for i, w in weights.items()}
    point = sum(w * v for v, w in entries.values())
    return Representation(entries, point)


def test_config_defaults_and_coercion():
    cfg = SolverConfig(stepsize="exact", reduction="trivial")
    assert cfg.stepsize is Stepsize.EXACT
    assert cfg.reduction is Reduction.TRIVIAL
    assert SolverConfig().stepsize is Stepsize.ADAPTIVE
    assert SolverConfig().reduction is Reduction.CARATHEODORY


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gap_tolerance": 0.0},
        {"max_iters": 0},
        {"stepsize": "armijo"},
        {"reduction": "none"},
        {"mu_zero_tolerance": 1.0},
        {"check_every": 0},
    ],
)
def test_config_validation(kwargs):
    with raises(InvalidConfig):
        SolverConfig(**kwargs)


def test_adaptive_stepsize():
    obj = CompositeObjective([[1.0]], [0.0], QuadraticFunction([[2.0]], [0.0]))
    x, d = np.array([0.5]), np.array([-1.0])
    assert obj.lipschitz_rho() == pytest.approx(4.0)
    assert stepsize(obj, x, d, 1.0, Stepsize.ADAPTIVE) == pytest.approx(0.5)
    assert stepsize(obj, x, d, 0.2, Stepsize.ADAPTIVE) == pytest.approx(0.2)
    assert stepsize(obj, x, d, 1.0, Stepsize.ADAPTIVE, rho=0.0) == 1.0


def test_exact_stepsize(shifted_square):
    gamma = stepsize(shifted_square, np.array([1.0]), np.array([-1.0]), 1.0, "exact")
    assert gamma == pytest.approx(0.7)
    capped = stepsize(shifted_square, np.array([1.0]), np.array([-1.0]), 0.5, "exact")
    assert capped == pytest.approx(0.5)


def test_exact_stepsize_for_general_g():
    g = CallableFunction(
        lambda y: float(np.exp(y[0]) + 2.0 * (y[0] - 1.0) ** 2),
        lambda y: np.array([np.exp(y[0]) + 4.0 * (y[0] - 1.0)]),
        dim=1,
        sigma=4.0,
    )
    obj = CompositeObjective([[1.0]], [0.0], g)
    gamma = stepsize(obj, np.array([1.0]), np.array([-1.0]), 1.0, "exact")
    t = 1.0 - gamma
    assert 0.0 < gamma < 1.0
    assert abs(np.exp(t) + 4.0 * (t - 1.0)) < 1e-6


def test_stepsize_errors(shifted_square):
    with raises(ZeroDirection):
        stepsize(shifted_square, np.array([0.5]), np.array([0.0]), 1.0)

    with raises(AscentDirection):
        stepsize(shifted_square, np.array([0.5]), np.array([1.0]), 1.0)


def test_forward_weights():
    p = Simplex(3)
    rep = representation(p, {0: 0.5, 1: 0.5})
    weights = _forward_weights(rep, 2, p.vertex(2), 0.2)
    assert {i: w for i, (_, w) in weights.items()} == pytest.approx(
        {0: 0.4, 1: 0.4, 2: 0.2}
    )

    existing = _forward_weights(rep, 1, p.vertex(1), 0.5)
    assert {i: w for i, (_, w) in existing.items()} == pytest.approx({0: 0.25, 1: 0.75})

    full = _forward_weights(rep, 2, p.vertex(2), 1.0)
    assert list(full) == [2]


def test_away_weights():
    p = Simplex(3)
    rep = representation(p, {0: 0.5, 1: 0.3, 2: 0.2})
    weights = _away_weights(rep, 2, 0.1, drop=False)
    assert {i: w for i, (_, w) in weights.items()} == pytest.approx(
        {0: 0.55, 1: 0.33, 2: 0.12}
    )

    dropped = _away_weights(rep, 2, 0.25, drop=True)
    remaining = {i: w for i, (_, w) in dropped.items()}
    assert remaining == pytest.approx({0: 0.625, 1: 0.375})


def test_representation_check():
    p = Simplex(3)
    rep = representation(p, {0: 0.5, 1: 0.5})
    rep.check(max_size=4)
    assert rep.size == 2
    assert rep.reconstruct().tolist() == pytest.approx([0.5, 0.5, 0.0])

    with raises(InvalidRepresentation):
        Representation({0: (p.vertex(0), 0.7)}, p.vertex(0)).check()

    with raises(InvalidRepresentation):
        Representation({0: (p.vertex(0), 1.0)}, p.vertex(1)).check()

    with raises(InvalidRepresentation):
        rep.check(max_size=1)


@pytest.mark.parametrize("reduction", list(Reduction))
def test_away_step_drops_a_vertex(reduction):
    p = Simplex(3)
    obj = distance_objective([0.0, 0.5, 0.5])
    rep = representation(p, {0: 0.2, 1: 0.4, 2: 0.4})
    cfg = SolverConfig(stepsize="exact", reduction=reduction, debug=True)

    new, record = ascg_step(obj, p, rep, cfg)

    assert record.step_type is StepType.DROP
    assert record.away_vertex_id == 0
    assert record.fw_vertex_id == 1
    assert record.gamma_bar == pytest.approx(0.25)
    assert record.fw_gap == pytest.approx(0.12)
    assert sorted(new.ids) == [1, 2]
    assert new.mu.tolist() == pytest.approx([0.5, 0.5])
    assert new.point.tolist() == pytest.approx([0.0, 0.5, 0.5])


def test_away_bound_when_the_weight_rounds_to_one():
    p = Simplex(3)
    assert away_bound(representation(p, {0: 0.2, 1: 0.4, 2: 0.4}), 0) == (
        pytest.approx(0.25)
    )

    rep = representation(p, {0: 1.0, 1: 1e-17})
    assert rep.mu.sum() == 1.0
    assert away_bound(rep, 0) == pytest.approx(1e17)
    assert away_bound(rep, 1) == pytest.approx(1e-17)

    with raises(SingletonAway):
        away_bound(representation(p, {2: 1.0}), 2)


def test_forward_step_adds_a_vertex():
    p = Simplex(3)
    obj = distance_objective([0.0, 0.5, 0.5])
    rep = representation(p, {0: 1.0})
    new, record = ascg_step(obj, p, rep, SolverConfig(stepsize="exact"))
    assert record.step_type is StepType.FORWARD
    assert record.added
    assert record.gamma_bar == 1.0
    assert new.size == 2


def test_one_dimensional_exact_run(unit_interval, shifted_square):
    cfg = SolverConfig(stepsize="exact", start_vertex_id=1, gap_tolerance=1e-9)
    trace = ascg_run(shifted_square, unit_interval, cfg)

    assert [r.step_type for r in trace.records] == [StepType.FORWARD, StepType.STOP]
    assert trace.records[0].gamma == pytest.approx(0.7)
    assert trace.point.tolist() == pytest.approx([0.3])
    assert trace.iterations == 1
    assert trace.converged
    assert trace.final.l_count == 1


def test_adaptive_run_matches_exact_on_a_quadratic(unit_interval, shifted_square):
    cfg = SolverConfig(start_vertex_id=1, gap_tolerance=1e-9)
    trace = ascg_run(shifted_square, unit_interval, cfg)
    assert trace.rho == pytest.approx(2.0)
    assert trace.records[0].gamma == pytest.approx(0.7)


def test_start_at_the_optimum():
    p = Simplex(3)
    obj = distance_objective([1.0, 0.0, 0.0])
    trace = ascg_run(obj, p, SolverConfig(start_vertex_id=0))
    assert len(trace.records) == 1
    assert trace.final.step_type is StepType.STOP
    assert trace.final.fw_gap == 0.0
    assert trace.iterations == 0


@pytest.mark.parametrize("reduction", list(Reduction))
@pytest.mark.parametrize("rule", list(Stepsize))
def test_simplex_center(reduction, rule):
    p = Simplex(3)
    obj = distance_objective(np.full(3, 1 / 3))
    cfg = SolverConfig(stepsize=rule, reduction=reduction, gap_tolerance=1e-10)
    trace = ascg_run(obj, p, cfg)
    assert trace.converged
    assert np.allclose(trace.point, 1 / 3, atol=1e-4)
    assert trace.max_repr_size <= 3
    trace.representation.check()


def test_ascg_converges_where_cg_zigzags():
    p = Simplex(3)
    obj = distance_objective([0.5, 0.5, -0.1])
    cfg = SolverConfig(stepsize="exact", start_vertex_id=2, gap_tolerance=1e-10)

    ascg = ascg_run(obj, p, cfg)
    cg = cg_run(obj, p, cfg)

    assert ascg.converged
    assert ascg.drop_count >= 1
    assert np.allclose(ascg.point, [0.5, 0.5, 0.0], atol=1e-5)
    assert not cg.converged
    assert cg.final.fw_gap > 1e-8
    assert cg.iterations == cfg.max_iters


def reference_steps(target, start, steps, tol=1e-6):
    """A direct transcription of the away-step loop on the simplex, ``E = I``."""
    V = np.eye(len(target))
    w = {start: 1.0}
    x = V[start].copy()
    out = []
    for _ in range(steps):
        g = 2.0 * x - 2.0 * target
        s = int(np.argmin(V @ g))
        if g @ (x - V[s]) <= tol:
            out.append(("stop", 0.0, sorted(w)))
            break
        u = min(w, key=lambda i: (-(V[i] @ g), i))
        d_fw, d_away = V[s] - x, x - V[u]
        if g @ d_fw <= g @ d_away:
            gamma = min(-(g @ d_fw) / (2.0 * d_fw @ d_fw), 1.0)
            w = {i: wi * (1.0 - gamma) for i, wi in w.items()}
            w[s] = w.get(s, 0.0) + gamma
            if gamma >= 1.0:
                w = {s: 1.0}
            x = x + gamma * d_fw
            kind = "forward"
        else:
            gamma_bar = w[u] / (1.0 - w[u])
            gamma = min(-(g @ d_away) / (2.0 * d_away @ d_away), gamma_bar)
            w = {i: wi * (1.0 + gamma) for i, wi in w.items()}
            w[u] -= gamma
            kind = "away"
            if gamma >= gamma_bar:
                del w[u]
                kind = "drop"
            x = x + gamma * d_away
        out.append((kind, gamma, sorted(w)))
    return out


@pytest.mark.parametrize(
    "target, start", [([0.6, 0.4, 0.0], 0), ([0.6, 0.4, 0.0], 2), ([0.5, 0.5, -0.1], 2)]
)
def test_steps_match_a_direct_transcription(target, start):
    p = Simplex(3)
    obj = distance_objective(target)
    cfg = SolverConfig(stepsize="exact", reduction="trivial", start_vertex_id=start)
    expected = reference_steps(np.array(target), start, 3)

    rep = Representation.from_vertex(start, p.vertex(start))
    for k, (kind, gamma, ids) in enumerate(expected, start=1):
        rep, record = ascg_step(obj, p, rep, cfg, iteration=k)
        assert record.step_type.value == kind
        assert record.gamma == pytest.approx(gamma, abs=1e-12)
        assert sorted(rep.ids) == ids


def test_cg_step():
    p = Simplex(3)
    obj = distance_objective([0.0, 0.5, 0.5])
    x, record = cg_step(obj, p, p.vertex(0), SolverConfig(stepsize="exact"))
    assert record.step_type is StepType.FORWARD
    assert record.repr_size == 0
    assert p.contains(x)
    assert obj.value(x) < obj.value(p.vertex(0))


def test_trace_invariants_hold():
    problem = random_quadratic_problem("box", 4, seed=5)
    cfg = SolverConfig(debug=True, check_every=1, max_iters=300)
    trace = ascg_run(problem.objective, problem.polytope, cfg)
    assert check_trace_invariants(trace.records, max_repr=5) == []
    assert trace.final.s_count <= trace.final.l_count


def test_trace_invariant_violations_are_reported():
    records = [
        StepRecord(1, 1.0, 0.5, StepType.FORWARD, 0.5, 1.0, 2),
        StepRecord(2, 2.0, -0.1, StepType.AWAY, 0.7, 0.5, 2, s_count=1, l_count=1),
    ]
    problems = check_trace_invariants(records, max_repr=1)
    assert any("negative gap" in p for p in problems)
    assert any("gamma outside" in p for p in problems)
    assert any("objective increased" in p for p in problems)
    assert any("counters exceed" in p for p in problems)
    assert any("> 1" in p for p in problems)


def test_monotonicity_tolerance_is_absolute():
    def pair(increase):
        return [
            StepRecord(1, 1000.0, 0.5, StepType.FORWARD, 0.5, 1.0, 2),
            StepRecord(2, 1000.0 + increase, 0.4, StepType.FORWARD, 0.5, 1.0, 2),
        ]

    assert check_trace_invariants(pair(5e-10)) == []
    assert check_trace_invariants(pair(5e-9)) == ["iteration 2: objective increased"]


@pytest.mark.parametrize("seed", [3, 4])
def test_incremental_and_full_reductions_agree(seed):
    problem = random_quadratic_problem("box", 6, seed=seed)
    obj, p = problem.objective, problem.polytope
    base = SolverConfig(gap_tolerance=1e-9, max_iters=500)

    irr = ascg_run(obj, p, base)
    full = ascg_run(obj, p, replace(base, reduction=Reduction.CARATHEODORY_FULL))
    trivial = ascg_run(obj, p, replace(base, reduction=Reduction.TRIVIAL))

    assert len(irr.records) == len(full.records)
    assert np.allclose(irr.f_values, full.f_values, rtol=1e-9, atol=1e-12)
    assert [r.step_type for r in irr.records] == [r.step_type for r in full.records]
    assert irr.representation.ids == full.representation.ids
    assert trivial.final.f_value == pytest.approx(irr.final.f_value, abs=1e-6)


def test_incremental_reduction_on_a_ten_dimensional_box():
    problem = random_quadratic_problem("box", 10, seed=0)
    obj, p = problem.objective, problem.polytope
    base = SolverConfig(gap_tolerance=1e-12, max_iters=500, debug=True)

    irr = ascg_run(obj, p, base)
    full = ascg_run(obj, p, replace(base, reduction=Reduction.CARATHEODORY_FULL))

    assert len(irr.records) == len(full.records)
    assert np.allclose(irr.f_values, full.f_values, rtol=0.0, atol=1e-8)
    assert np.allclose(irr.point, full.point, rtol=0.0, atol=1e-8)
    assert irr.max_repr_size <= 11
    assert full.max_repr_size <= 11


def test_csv_round_trip():
    p = Simplex(3)
    obj = distance_objective(np.full(3, 1 / 3))
    trace = ascg_run(obj, p, SolverConfig(gap_tolerance=1e-10))

    text = trace.to_csv()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)

    records = read_trace_csv(io.StringIO(text))
    assert len(records) == len(trace.records)
    assert records[-1].step_type is StepType.STOP
    for a, b in zip(records, trace.records):
        assert (a.iteration, a.f_value, a.fw_gap, a.step_type) == (
            b.iteration,
            b.f_value,
            b.fw_gap,
            b.step_type,
        )
        assert a.repr_size == b.repr_size
        assert (a.s_count, a.l_count) == (b.s_count, b.l_count)

    with raises(ValueError):
        read_trace_csv(io.StringIO("a,b\n1,2\n"))


def test_check_active_sets():
    p = Box(2)
    rep = representation(p, {3: 0.5, 1: 0.5})
    assert rep.point.tolist() == [1.0, 0.0]
    assert check_active_sets(p, rep)


def test_same_seed_same_start():
    problem = random_quadratic_problem("simplex", 5, seed=2)
    cfg = SolverConfig(seed=11, max_iters=50)
    a = ascg_run(problem.objective, problem.polytope, cfg)
    b = ascg_run(problem.objective, problem.polytope, cfg)
    assert a.to_csv() == b.to_csv()
