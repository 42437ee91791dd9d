import math

import numpy as np
import pytest
from pytest import raises

from ascg.certificates import (
    RateCertificate,
    alpha_dagger,
    check_error_bound,
    check_rate_bound,
    check_vertex_facet_lemma,
    constants_table,
    corollary_margin,
    error_bound_kappa,
    hoffman_theta,
    predicted_iterations,
    rate_certificate,
    representation_bound,
    solution_certificate,
    stacked_matrix,
)
from ascg.errors import (
    BoundViolated,
    CertificateScopeError,
    NonUniqueOptimum,
    TooManyRows,
)
from ascg.harness import generate_l1ls, random_quadratic_problem
from ascg.polyhedron import Box, L1Ball, Simplex
from ascg.solver import (
    Reduction,
    Representation,
    SolverConfig,
    ascg_run,
    ascg_step,
    cg_run,
)


@pytest.mark.parametrize(
    "M, variant, expected",
    [
        ([[1.0]], "squared", 1.0),
        ([[2.0, 0.0], [0.0, 2.0]], "squared", 0.25),
        ([[2.0, 0.0], [0.0, 2.0]], "classical", 0.5),
        ([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], "squared", 1.0),
        ([[1.0, 0.0], [1.0, 1.0]], "squared", 2.0 / (3.0 - math.sqrt(5.0))),
        ([[0.0, 0.0]], "squared", 0.0),
    ],
)
def test_hoffman_theta(M, variant, expected):
    assert hoffman_theta(M, variant) == pytest.approx(expected)


def test_hoffman_theta_limits():
    with raises(TooManyRows):
        hoffman_theta(np.eye(19))

    with raises(ValueError):
        hoffman_theta(np.eye(2), variant="cubic")


def test_kappa_and_alpha():
    kappa = error_bound_kappa(1.0, 0.0, 1.0, 1.4, 1.0, 2.0)
    assert kappa == pytest.approx(7.16)
    assert alpha_dagger(1.0, 2.0, 1.0, math.sqrt(2.0), 4) == pytest.approx(1 / 512)
    assert alpha_dagger(1.0, 0.0, 1.0, 1.0, 4) == 0.5
    assert alpha_dagger(100.0, 1.0, 1.0, 1.0, 1) == 0.5


def test_one_dimensional_certificate(unit_interval, shifted_square):
    cert = rate_certificate(shifted_square, unit_interval)
    assert stacked_matrix(shifted_square, unit_interval).shape == (4, 1)
    assert cert.theta == pytest.approx(1.0)
    assert cert.omega == pytest.approx(1.0)
    assert cert.kappa == pytest.approx(7.16)
    assert cert.N == 2
    assert cert.C == pytest.approx(1.4)
    assert cert.alpha == pytest.approx(1.0 / (8 * 2.0 * 7.16 * 4))
    assert cert.bound(1) == pytest.approx(1.4)
    assert cert.contraction == pytest.approx(math.sqrt(1.0 - cert.alpha))


def test_representation_bound():
    assert representation_bound(Box(3), Reduction.TRIVIAL) == 8
    assert representation_bound(Box(3), "caratheodory") == 4
    assert representation_bound(Simplex(5), Reduction.CARATHEODORY_FULL) == 6


def test_predicted_iterations(unit_interval, shifted_square):
    cert = rate_certificate(shifted_square, unit_interval)
    k = predicted_iterations(cert, 1e-6)
    assert k > 1
    assert cert.bound(k) <= 1e-6 * (1 + 1e-9)
    assert cert.bound(k - 1) > 1e-6
    assert predicted_iterations(cert, 10.0) == 1


@pytest.fixture
def certified_problem():
    return random_quadratic_problem("box", 3, seed=7)


def test_rate_bound_holds(certified_problem):
    obj, p = certified_problem.objective, certified_problem.polytope
    cert = rate_certificate(obj, p)
    solution = solution_certificate(obj, p)
    trace = ascg_run(obj, p, SolverConfig(gap_tolerance=1e-10))

    report = check_rate_bound(trace, cert, solution.f_star)
    assert report.checked == len(trace.records)
    assert report.certified_contraction == pytest.approx(cert.contraction)
    assert solution.gap <= 1e-10
    assert np.allclose(solution.t_star, obj.E @ solution.x_star)


@pytest.mark.parametrize(
    "kind, n",
    [("box", 2), ("box", 3), ("box", 4), ("simplex", 3), ("simplex", 4)]
    + [("l1_ball", 2), ("l1_ball", 3)],
)
@pytest.mark.parametrize("stepsize", ["adaptive", "exact"])
@pytest.mark.parametrize("reduction", ["caratheodory", "trivial"])
def test_rate_bound_holds_across_instances(kind, n, stepsize, reduction):
    problem = random_quadratic_problem(kind, n, seed=10 + n)
    obj, p = problem.objective, problem.polytope
    cert = rate_certificate(obj, p, reduction=reduction)
    f_star = solution_certificate(obj, p, SolverConfig(stepsize="exact")).f_star
    cfg = SolverConfig(stepsize=stepsize, reduction=reduction, gap_tolerance=1e-10)

    trace = ascg_run(obj, p, cfg)

    report = check_rate_bound(trace, cert, f_star)
    assert report.checked == len(trace.records)


def test_rate_bound_scope_and_violation(certified_problem):
    obj, p = certified_problem.objective, certified_problem.polytope
    cert = rate_certificate(obj, p)
    f_star = solution_certificate(obj, p).f_star

    with raises(CertificateScopeError):
        check_rate_bound(cg_run(obj, p), cert, f_star)

    fake = RateCertificate(**{**cert.__dict__, "C": 1e-12, "alpha": 0.5})
    worst = int(np.argmax([obj.value(v) for v in p.vertices]))
    trace = ascg_run(obj, p, SolverConfig(start_vertex_id=worst, max_iters=5))
    with raises(BoundViolated) as e:
        check_rate_bound(trace, fake, f_star)
    assert e.value.iteration == 1


@pytest.mark.parametrize("kind", ["box", "simplex", "l1_ball"])
def test_error_bound(kind):
    problem = random_quadratic_problem(kind, 3, seed=7)
    obj, p = problem.objective, problem.polytope
    cert = rate_certificate(obj, p)
    solution = solution_certificate(obj, p, SolverConfig(stepsize="exact"))
    report = check_error_bound(obj, p, solution.x_star, cert.kappa, samples=1000)
    assert report.ok
    assert report.samples == 1000
    assert report.empirical_kappa > 0


def test_error_bound_needs_a_unique_optimum():
    problem = generate_l1ls(2, 3, 0.1, seed=0)
    with raises(NonUniqueOptimum):
        check_error_bound(problem.objective, problem.polytope, np.zeros(4), 1.0)


@pytest.mark.parametrize("p", [Simplex(3), Simplex(4), Box(2), Box(3), L1Ball(3)])
def test_vertex_facet_lemma(p):
    report = check_vertex_facet_lemma(p, trials=500, seed=1)
    assert report.ok
    assert report.admissible == 500
    assert report.min_margin >= -1e-9


def test_corollary_margin_along_a_run(certified_problem):
    obj, p = certified_problem.objective, certified_problem.polytope
    x_star = solution_certificate(obj, p).x_star
    omega = rate_certificate(obj, p).omega
    cfg = SolverConfig()

    rep = Representation.from_vertex(0, p.vertex(0), with_factor=True)
    rho = obj.lipschitz_rho()
    for k in range(1, 40):
        assert corollary_margin(obj, p, rep, x_star, omega) >= -1e-9
        rep, record = ascg_step(obj, p, rep, cfg, rho=rho, iteration=k)
        if record.fw_gap <= cfg.gap_tolerance:
            break


def test_constants_table(certified_problem):
    table = constants_table(certified_problem.objective, certified_problem.polytope)
    assert set(table) >= {"omega", "theta", "kappa", "alpha", "predicted_iterations"}
    assert table["omega"] == pytest.approx(2.0)
    assert table["N"] == 4
    assert 0 < table["alpha"] <= 0.5
