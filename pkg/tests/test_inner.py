import math

import numpy as np
import pytest

import almlab as al
from almlab.inner import smooth_part_gradient


def test_smooth_gradient_examples(qp_scalar):
    # A=[1], b=0, rho=1, lam=2, x=3: A'lam + rho A'(Ax-b) + Qx = 2 + 3 + 3
    pb = qp_scalar(rho=1.0)
    g = smooth_part_gradient(pb, np.array([2.0]), np.array([3.0]))
    assert g[0] == pytest.approx(8.0, abs=1e-12)
    # without a quadratic atom the same point gives 2 + 3 = 5
    f = al.CompositeFunction.single(al.Zero(1))
    pb0 = al.ProblemInstance(f, np.array([[1.0]]), np.zeros(1), 1.0)
    g0 = smooth_part_gradient(pb0, np.array([2.0]), np.array([3.0]))
    assert g0[0] == pytest.approx(5.0, abs=1e-12)
    # feasible x and lam = 0 give a zero gradient
    assert smooth_part_gradient(pb0, np.zeros(1), np.zeros(1))[0] == 0.0


def test_smooth_gradient_matches_finite_difference():
    pb = al.generate(al.BenchmarkSpec("qp", 5, 2, 1.7, 3))
    rng = np.random.default_rng(4)
    lam = rng.standard_normal(pb.p)

    def smooth(x):
        r = pb.A @ x - pb.b
        val = float(lam @ r) + 0.5 * pb.rho * float(r @ r)
        atom = pb.f.blocks[0][0]
        return val + atom.value(x)

    x = rng.standard_normal(pb.d)
    g = smooth_part_gradient(pb, lam, x)
    h = 1e-6
    for i in range(pb.d):
        e = np.zeros(pb.d)
        e[i] = h
        fd = (smooth(x + e) - smooth(x - e)) / (2 * h)
        assert abs(fd - g[i]) <= 1e-6 * (1.0 + abs(g[i]))


def test_inner_qp_closed_form(qp_scalar):
    # stationarity (1+rho) x + lam = 0
    pb = qp_scalar(rho=1.0)
    sol = al.solve_subproblem(pb, np.array([2.0]), al.InnerSettings(tol=1e-10))
    assert sol.x_plus[0] == pytest.approx(-1.0, abs=1e-8)
    assert sol.converged


def test_inner_box_clamp(p_box):
    pb = p_box(rho=1.0)
    lo = al.solve_subproblem(pb, np.array([-3.0]), al.InnerSettings(tol=1e-10))
    assert lo.x_plus[0] == pytest.approx(4.0, abs=1e-8)  # 1 - lam/rho = 4 >= 0
    hi = al.solve_subproblem(pb, np.array([3.0]), al.InnerSettings(tol=1e-10))
    assert hi.x_plus[0] == pytest.approx(0.0, abs=1e-8)  # clamp of 1 - 3
    assert hi.constraint_map[0] == pytest.approx(-1.0, abs=1e-8)


def test_obj_value_is_exact_aug_lagrangian():
    for fam, d, p in [("qp", 5, 2), ("basis_pursuit", 6, 3), ("nonneg_lp", 6, 3)]:
        pb = al.generate(al.BenchmarkSpec(fam, d, p, 1.0, 5))
        lam = np.linspace(-1, 1, p)
        sol = al.solve_subproblem(pb, lam, al.InnerSettings(tol=1e-8))
        assert sol.obj_value == al.aug_lagrangian(pb, sol.x_plus, lam)
        assert np.array_equal(sol.constraint_map, pb.A @ sol.x_plus - pb.b)


def test_residual_definition_and_tolerance():
    pb = al.generate(al.BenchmarkSpec("basis_pursuit", 8, 4, 2.0, 1))
    lam = np.full(pb.p, 0.3)
    sol = al.solve_subproblem(pb, lam, al.InnerSettings(tol=1e-9))
    assert sol.converged and sol.residual <= 1e-9
    g = smooth_part_gradient(pb, lam, sol.x_plus)
    recomputed = pb.f.nonsmooth_part().prox_residual(sol.x_plus, g, sol.step)
    assert recomputed == sol.residual


def test_descent_consistency():
    rng = np.random.default_rng(6)
    for fam, d, p in [("qp", 5, 2), ("basis_pursuit", 6, 3),
                      ("rank_deficient_box", 6, 3)]:
        pb = al.generate(al.BenchmarkSpec(fam, d, p, 1.0, 7))
        for _ in range(10):
            x0 = np.abs(rng.uniform(-3, 3, pb.d))  # inside dom f for all three
            lam = rng.uniform(-2, 2, pb.p)
            sol = al.solve_subproblem(pb, lam, al.InnerSettings(tol=1e-8, x0=x0))
            assert sol.obj_value <= al.aug_lagrangian(pb, x0, lam) + 1e-12


def test_objective_monotone_in_iteration_budget():
    pb = al.generate(al.BenchmarkSpec("nonneg_lp", 10, 4, 0.5, 2))
    lam = np.full(pb.p, 1.5)
    prev = math.inf
    for budget in (1, 2, 5, 10, 30, 100, 1000):
        sol = al.solve_subproblem(
            pb, lam, al.InnerSettings(tol=1e-12, max_iter=budget))
        assert sol.obj_value <= prev + 1e-12
        prev = sol.obj_value


def test_max_iter_returns_tagged_failure():
    pb = al.generate(al.BenchmarkSpec("qp", 8, 3, 1.0, 9))
    sol = al.solve_subproblem(pb, np.ones(3), al.InnerSettings(tol=1e-14, max_iter=2))
    assert not sol.converged
    assert sol.residual > 1e-14
    assert sol.iterations == 2
    assert math.isfinite(sol.obj_value)


def test_warm_start_at_solution_returns_immediately(qp_scalar):
    pb = qp_scalar(rho=1.0)
    sol = al.solve_subproblem(
        pb, np.array([2.0]),
        al.InnerSettings(tol=1e-8, x0=np.array([-1.0])))
    assert sol.iterations == 0
    assert sol.x_plus[0] == -1.0


def test_infeasible_start_never_returns_infinite_objective():
    # x0 violates the orthant by a hair; the residual there is tiny but the
    # solver must keep going until the objective is finite
    f = al.CompositeFunction.single(al.Nonneg(1))
    pb = al.ProblemInstance(f, np.array([[1.0]]), np.zeros(1), 1.0)
    sol = al.solve_subproblem(
        pb, np.zeros(1),
        al.InnerSettings(tol=1e-6, x0=np.array([-1e-18])))
    assert math.isfinite(sol.obj_value)
    assert sol.x_plus[0] >= 0.0


def test_divergence_detected_on_unbounded_subproblem():
    # linear objective with a descent direction in the null space of A
    f = al.CompositeFunction.single(al.Linear(np.array([1e6, -2e6])))
    pb = al.ProblemInstance(f, np.array([[1.0, 1.0]]), np.zeros(1), 1.0)
    with pytest.raises(al.DivergenceDetected):
        al.solve_subproblem(pb, np.zeros(1), al.InnerSettings(tol=1e-8))


def test_inner_settings_validation():
    with pytest.raises(al.ValidationError):
        al.InnerSettings(tol=0.0)
    with pytest.raises(al.ValidationError):
        al.InnerSettings(tol=1e-8, max_iter=0)
    with pytest.raises(al.ValidationError):
        al.InnerSettings(tol=1e-8, step_safety=1.5)
    with pytest.raises(al.ValidationError):
        al.InnerSettings(tol=1e-8, step_safety=0.0)


def test_brute_min_cross_checks_inner_solver(p_box):
    # the grid oracle and the solver agree on the P_box subproblem at lam=3
    pb = p_box(rho=1.0)
    lam = np.array([3.0])

    def objective(pts):
        vals = pb.f.value_batch(pts)
        r = pts @ pb.A.T - pb.b
        return vals + (r @ lam) + 0.5 * pb.rho * np.sum(r * r, axis=1)

    grid = al.GridSpec(np.array([-10.0]), np.array([10.0]), 2001)
    x_star, val = al.brute_min(objective, grid)
    sol = al.solve_subproblem(pb, lam, al.InnerSettings(tol=1e-10))
    assert abs(val - sol.obj_value) <= 1e-3
    assert abs(x_star[0] - sol.x_plus[0]) <= 1e-2
