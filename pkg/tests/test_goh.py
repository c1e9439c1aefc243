"""Transformed second-variation coefficients and their cross-checks."""

import numpy as np
import pytest

import socverify as sv


def _unit_cost_blocks(problem, traj, lin, mset):
    m = mset.vertices[0].scaled_to_unit_cost()
    hb = sv.h_blocks(problem, traj, m)
    gm = sv.goh_matrices(lin, hb)
    return m, hb, gm


def test_pe_blocks_exact_at_unit_cost(case):
    problem, traj, lin, mset, _ = case("pe", 1.0, 300)
    _, hb, gm = _unit_cost_blocks(problem, traj, lin, mset)
    K = traj.grid.N + 1
    np.testing.assert_allclose(hb.Huu, np.full((K, 1, 1), 2.0), atol=1e-8)
    np.testing.assert_allclose(hb.Hvu, np.zeros((K, 1, 1)), atol=1e-10)
    np.testing.assert_allclose(
        hb.Hxx, np.tile(np.diag([2.0, 2.0, 0.0]), (K, 1, 1)), atol=1e-8
    )
    np.testing.assert_allclose(gm.B, np.tile([[1.0], [0.0], [0.0]], (K, 1, 1)), atol=1e-8)
    np.testing.assert_allclose(gm.M, np.tile([[0.0, 2.0, 0.0]], (K, 1, 1)), atol=1e-8)
    np.testing.assert_allclose(gm.E, np.zeros((K, 1, 1)), atol=1e-8)
    np.testing.assert_allclose(gm.S, np.ones((K, 1, 1)), atol=1e-8)
    np.testing.assert_allclose(gm.G, np.zeros((K, 1, 1)), atol=1e-10)
    np.testing.assert_allclose(gm.R, np.full((K, 1, 1), 2.0), atol=1e-8)


def test_pe_endpoint_hessian(case):
    problem, traj, lin, mset, _ = case("pe", 1.0, 100)
    _, hb, _ = _unit_cost_blocks(problem, traj, lin, mset)
    expected = np.zeros((6, 6))
    expected[3, 4] = expected[4, 3] = -2.0  # cost cross term at the terminal point
    np.testing.assert_allclose(hb.ell_hess, expected, atol=1e-12)


def test_blocks_linear_in_multiplier(case):
    problem, traj, lin, mset, _ = case("goh-violator", 1.0, 80)
    m = mset.vertices[0]
    hb1 = sv.h_blocks(problem, traj, m)
    hb2 = sv.h_blocks(problem, traj, m.scaled(2.0))
    gm1 = sv.goh_matrices(lin, hb1)
    gm2 = sv.goh_matrices(lin, hb2)
    for a, b in ((hb1.Hxx, hb2.Hxx), (hb1.Huu, hb2.Huu), (hb1.ell_hess, hb2.ell_hess),
                 (gm1.M, gm2.M), (gm1.E, gm2.E), (gm1.S, gm2.S), (gm1.G, gm2.G),
                 (gm1.R, gm2.R)):
        np.testing.assert_allclose(2.0 * a, b, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(gm1.B, gm2.B, atol=0)  # multiplier-free


def test_s_plus_g_decomposes_coupling(case):
    """S and G are the symmetric/antisymmetric halves of H_vx F_v."""
    for name in ("pe", "goh-violator", "lq-decoupled"):
        problem, traj, lin, mset, vdata = case(name, 1.0, 80)
        hb, gm = vdata[0].hb, vdata[0].gm
        X = np.einsum("kma,kan->kmn", hb.Hvx, lin.Fv)
        np.testing.assert_allclose(gm.S + gm.G, X, atol=1e-12)
        np.testing.assert_allclose(gm.S, np.swapaxes(gm.S, 1, 2), atol=1e-12)
        np.testing.assert_allclose(gm.G, -np.swapaxes(gm.G, 1, 2), atol=1e-12)
        np.testing.assert_allclose(gm.R, np.swapaxes(gm.R, 1, 2), atol=1e-10)


def test_b_matches_bracket_route(case):
    for name in ("pe", "cubic", "goh-violator"):
        problem, traj, lin, mset, _ = case(name, 1.0, 200)
        gm = sv.goh_matrices(lin, sv.h_blocks(problem, traj, mset.vertices[0]))
        cols = sv.bracket_b_columns(problem, traj, lin)
        assert np.max(np.abs(cols - gm.B)) <= 1e-6, name


def test_g_matches_bracket_route(case):
    problem, traj, lin, mset, vdata = case("goh-violator", 1.0, 100)
    gm = vdata[0].gm
    galt = sv.bracket_g_values(problem, traj, vdata[0].mult)
    np.testing.assert_allclose(galt, gm.G, atol=1e-10)
    assert gm.G[0, 0, 1] == pytest.approx(0.25, abs=1e-10)


def test_r_cross_check_small_in_bracket_class(case):
    for name in ("pe", "lq-decoupled", "cubic"):
        problem, traj, lin, mset, vdata = case(name, 1.0, 300)
        rc = sv.r_cross_check(problem, traj, lin, vdata[0].gm, vdata[0].mult)
        assert rc["max_deviation"] <= 1e-6, (name, rc)


def test_classification_flags(case):
    _, _, _, _, vd_pe = case("pe", 1.0, 80)
    assert vd_pe[0].flags.in_co_lambda_sharp and vd_pe[0].flags.in_g_co_lambda_sharp

    _, _, _, _, vd_goh = case("goh-violator", 1.0, 80)
    f = vd_goh[0].flags
    assert f.in_co_lambda_sharp and not f.in_g_co_lambda_sharp
    assert f.max_abs_g == pytest.approx(0.25, abs=1e-10)

    _, _, _, _, vd_lc = case("lc-violator", 1.0, 80)
    f = vd_lc[0].flags
    assert not f.in_co_lambda_sharp and not f.in_g_co_lambda_sharp
    assert f.min_eig_huu == pytest.approx(-1.0, abs=1e-10)


def test_shapes_with_no_affine_controls(case):
    problem, traj, lin, mset, _ = case("lc-violator", 1.0, 50)
    hb = sv.h_blocks(problem, traj, mset.vertices[0])
    gm = sv.goh_matrices(lin, hb)
    K = traj.grid.N + 1
    assert gm.B.shape == (K, problem.n, 0)
    assert gm.S.shape == (K, 0, 0)
    assert gm.Fv_T.shape == (problem.n, 0)


def test_lie_bracket_on_constant_fields(case):
    """Brackets of the two affine fields reproduce the hand value."""
    problem, traj, lin, mset, _ = case("goh-violator", 1.0, 50)
    xu = np.hstack([traj.x, traj.u])
    br = sv.lie_bracket_x(problem.fields[1], problem.fields[2]).value_many(xu)
    np.testing.assert_allclose(br, np.tile([0.0, 0.0, 1.0], (len(xu), 1)), atol=1e-12)
    rev = sv.lie_bracket_x(problem.fields[2], problem.fields[1]).value_many(xu)
    np.testing.assert_allclose(br, -rev, atol=0)
    # the bracket contraction reproduces the antisymmetric coupling entry
    m = mset.vertices[0]
    assert 0.5 * float(m.p[0] @ br[0]) == pytest.approx(0.25, abs=1e-12)
