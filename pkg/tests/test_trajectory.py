"""Grids, integrators, discrete calculus, and the direction transform."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import socverify as sv


def _exp_problem() -> sv.ProblemDef:
    """Scalar test model with drift x' = x and an unused pair of controls."""
    f0 = sv.VectorField(1, 1, [sv.poly_from_monomials(2, [(1.0, (1, 0))])])
    cost = sv.EndpointMap(1, sv.poly_from_monomials(2, [(1.0, (0, 1))]))
    pin = sv.EndpointMap(1, sv.poly_from_monomials(2, [(1.0, (1, 0)), (-1.0, (0, 0))]))
    return sv.ProblemDef("exp", 1, 1, 0, 1.0, (f0,), cost, (), (pin,))


def test_grid_basics():
    g = sv.Grid(2.0, 8)
    assert g.h == pytest.approx(0.25)
    np.testing.assert_allclose(g.nodes, np.linspace(0, 2, 9))
    assert g.weights.sum() == pytest.approx(2.0)
    assert g.weights[0] == pytest.approx(g.h / 2)


def test_trapezoid_exact_on_linear():
    g = sv.Grid(3.0, 17)
    t = g.nodes
    assert sv.trapezoid(2.0 + 5.0 * t, g) == pytest.approx(2 * 3 + 5 * 9 / 2, rel=1e-14)


def test_cumulative_trapezoid_prefix():
    g = sv.Grid(1.0, 30)
    f = np.sin(3 * g.nodes)
    c = sv.cumulative_trapezoid(f, g)
    assert c[0] == 0.0
    assert c[-1] == pytest.approx(sv.trapezoid(f, g), rel=1e-14)


def test_deriv4_exact_on_quartic():
    g = sv.Grid(1.0, 25)
    t = g.nodes
    f = t**4 + 2 * t**3 - t
    df = sv.deriv4(f, g.h)
    np.testing.assert_allclose(df, 4 * t**3 + 6 * t**2 - 1, rtol=0, atol=1e-11)


def test_deriv4_vector_valued():
    g = sv.Grid(1.0, 25)
    f = np.stack([g.nodes**2, np.ones_like(g.nodes)], axis=1)
    df = sv.deriv4(f, g.h)
    np.testing.assert_allclose(df[:, 0], 2 * g.nodes, atol=1e-11)
    np.testing.assert_allclose(df[:, 1], 0.0, atol=1e-12)


def test_rk4_fourth_order_on_exponential():
    problem = _exp_problem()
    errs = {}
    for N in (20, 40, 80):
        g = sv.Grid(1.0, N)
        K = N + 1
        traj = sv.integrate_state(problem, g, np.array([1.0]), np.zeros((K, 1)), np.zeros((K, 0)))
        errs[N] = abs(traj.x[-1, 0] - np.e)
    orders = [np.log2(errs[20] / errs[40]), np.log2(errs[40] / errs[80])]
    assert min(orders) > 3.9


def test_pe_closed_form_under_constant_affine_control():
    problem, _ = sv.registry("pe", T=1.0, grid_n=10)
    sigma = 0.7
    g = sv.Grid(1.0, 400)
    K = g.N + 1
    traj = sv.integrate_state(
        problem, g, np.zeros(3), np.zeros((K, 1)), np.full((K, 1), sigma)
    )
    t = g.nodes
    np.testing.assert_allclose(traj.x[:, 0], sigma * t**2 / 2, atol=1e-10)
    np.testing.assert_allclose(traj.x[:, 1], sigma * t, atol=1e-12)
    x3 = sigma**2 * (t**5 / 20 + t**3 / 3 + t**2 / 2)
    np.testing.assert_allclose(traj.x[:, 2], x3, atol=1e-9)


def test_linearized_superposition():
    problem, traj = sv.registry("pe", T=1.0, grid_n=60)
    lin = sv.linearize(problem, traj)
    rng = np.random.default_rng(0)
    K = traj.grid.N + 1
    a = (rng.normal(size=3), rng.normal(size=(K, 1)), rng.normal(size=(K, 1)))
    b = (rng.normal(size=3), rng.normal(size=(K, 1)), rng.normal(size=(K, 1)))
    da = sv.integrate_linearized(lin, *a)
    db = sv.integrate_linearized(lin, *b)
    dc = sv.integrate_linearized(lin, *(2 * p - 3 * q for p, q in zip(a, b)))
    np.testing.assert_allclose(dc.x, 2 * da.x - 3 * db.x, rtol=1e-10, atol=1e-10)


def test_transform_residual_second_order():
    problem, _ = sv.registry("pe", T=1.0, grid_n=10)
    res = {}
    for N in (100, 200, 400):
        _, traj = sv.registry("pe", T=1.0, grid_n=N)
        lin = sv.linearize(problem, traj)
        t = traj.grid.nodes
        u = np.sin(2 * np.pi * t)[:, None]
        v = np.cos(np.pi * t)[:, None]
        d = sv.integrate_linearized(lin, np.array([0.3, -0.2, 0.1]), u, v)
        res[N] = sv.goh_transform_direction(lin, d).transform_residual
    orders = [np.log2(res[100] / res[200]), np.log2(res[200] / res[400])]
    assert min(orders) > 1.9


def test_transform_consistency_with_propagation():
    """Transforming an integrated direction agrees with direct propagation."""
    problem, traj = sv.registry("pe", T=1.0, grid_n=300)
    lin = sv.linearize(problem, traj)
    t = traj.grid.nodes
    u = (t**2 - 0.3)[:, None]
    v = np.sin(np.pi * t)[:, None]
    d = sv.integrate_linearized(lin, np.array([0.1, 0.0, -0.2]), u, v)
    gd = sv.goh_transform_direction(lin, d)
    direct = sv.goh_propagate(lin, gd.xi0, gd.u, gd.y, gd.h)
    assert np.max(np.abs(direct.xi - gd.xi)) < 5e-5  # both O(N^-2) routes


def test_goh_propagate_default_h():
    problem, traj = sv.registry("pe", T=1.0, grid_n=40)
    lin = sv.linearize(problem, traj)
    K = traj.grid.N + 1
    y = np.linspace(0, 2, K)[:, None]
    gd = sv.goh_propagate(lin, np.zeros(3), np.zeros((K, 1)), y)
    np.testing.assert_allclose(gd.h, y[-1])


def test_gamma_order_values():
    problem, traj = sv.registry("pe", T=1.0, grid_n=50)
    lin = sv.linearize(problem, traj)
    K = traj.grid.N + 1
    gd = sv.goh_propagate(lin, np.zeros(3), np.zeros((K, 1)), np.ones((K, 1)))
    assert sv.gamma_order(gd) == pytest.approx(2.0, rel=1e-12)  # |h|^2 + int |y|^2
    gd2 = sv.goh_propagate(lin, np.array([1.0, 2.0, 0.0]), np.ones((K, 1)), np.zeros((K, 1)))
    assert sv.gamma_order(gd2) == pytest.approx(5.0 + 1.0, rel=1e-12)


def test_csv_roundtrip_exact(tmp_path):
    problem, traj = sv.registry("goh-violator", T=0.5, grid_n=33)
    rng = np.random.default_rng(7)
    traj = sv.Trajectory(
        traj.grid, rng.normal(size=traj.x.shape), rng.normal(size=traj.u.shape),
        rng.normal(size=traj.v.shape),
    )
    path = tmp_path / "traj.csv"
    sv.write_trajectory_csv(traj, path)
    back = sv.read_trajectory_csv(path, problem)
    assert back.grid.N == traj.grid.N and back.grid.T == traj.grid.T
    for a, b in ((back.x, traj.x), (back.u, traj.u), (back.v, traj.v)):
        np.testing.assert_array_equal(a, b)


def test_feasibility_report_reference():
    problem, traj = sv.registry("pe", T=1.0, grid_n=100)
    rep = sv.feasibility_report(problem, traj)
    assert rep.defect < 1e-10
    assert np.max(np.abs(rep.equality_residuals)) < 1e-12
    assert rep.active_inequalities == ()


def test_feasibility_report_flags_violation():
    problem, traj = sv.registry("pe", T=1.0, grid_n=50)
    bad = sv.Trajectory(traj.grid, traj.x + 0.3, traj.u, traj.v)
    rep = sv.feasibility_report(problem, bad)
    assert np.max(np.abs(rep.equality_residuals)) > 0.1


@given(st.integers(3, 40), st.floats(0.1, 5.0, allow_nan=False))
@settings(max_examples=30, deadline=None)
def test_grid_weight_invariants(N, T):
    g = sv.Grid(T, N)
    assert g.weights.shape == (N + 1,)
    assert g.weights.sum() == pytest.approx(T, rel=1e-12)
    assert np.all(g.weights > 0)
