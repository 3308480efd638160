import math

import numpy as np
import pytest

from cubicwave import appendix
from cubicwave.errors import InvalidInput

SQRT2 = math.sqrt(2.0)

CASES = [(0, "even", 0), (0, "odd", 1), (1, "even", 2), (1, "odd", 3)]


@pytest.fixture(scope="module")
def hits():
    return {(k, br): appendix.find_intersection(k, br) for k, br, _ in CASES}


@pytest.mark.parametrize("k,branch,n", CASES)
def test_intersection_matches_shooting(hits, solve, k, branch, n):
    hit = hits[(k, branch)]
    assert hit.n == n and hit.nodal_count == n
    sol = solve(n)
    assert hit.c == pytest.approx(sol.c_n, rel=1e-8)
    assert hit.b == pytest.approx(sol.b_n, rel=1e-8)
    assert hit.glued_residual < 1e-6


def test_ground_state_intersection_exact(hits):
    hit = hits[(0, "even")]
    assert hit.c == pytest.approx(SQRT2, rel=1e-12)
    assert hit.b == pytest.approx(SQRT2, rel=1e-12)


def test_center_map_matches_closed_form_at_small_c():
    # linearised problem has U = c artanh(rho) / rho
    c = 1e-4
    p = appendix.center_map(c)
    r = appendix.RHO0
    assert p.U == pytest.approx(c * math.atanh(r) / r, rel=1e-6)


def test_ground_state_maps_coincide():
    # U = sqrt2 is an exact solution from both ends
    a = appendix.center_map(SQRT2)
    b = appendix.cone_map(SQRT2)
    assert a.U == pytest.approx(SQRT2, rel=1e-10)
    assert b.U == pytest.approx(SQRT2, rel=1e-10)
    assert abs(a.dU) < 1e-9 and abs(b.dU) < 1e-9


def test_branch_offsets():
    assert appendix.branch_offset(2, 1.0) == pytest.approx(4 * math.pi)
    assert appendix.branch_offset(1, -1.0) == pytest.approx(4 * math.pi)


def test_bad_arguments():
    with pytest.raises(InvalidInput):
        appendix.find_intersection(-1)
    with pytest.raises(InvalidInput):
        appendix.find_intersection(0, "both")


def test_glued_profile_equals_interior_orbit(hits, solve):
    # U(tanh x) = f(x) coth(x) for the interior profile of the same nodal class
    hit = hits[(0, "odd")]
    rho, U, _ = appendix.glued_profile(hit.c, hit.b, num=801)
    sel = (rho > 0.05) & (rho < 0.99)
    x = np.arctanh(rho[sel])
    f = solve(1).orbit.f(x)
    np.testing.assert_allclose(U[sel], f / np.tanh(x), rtol=1e-7, atol=1e-7)


def test_lemma_monitors_pass():
    rep = appendix.lemma_monitors()
    assert rep.passed, rep.violations
    chk = rep.checks
    assert chk["r_monotone_small_c"] and chk["R_monotone_small_b"]
    assert chk["c_L"] < chk["c_R"] and chk["b_L"] < chk["b_R"]


def test_curve_csv(tmp_path):
    pts = appendix.trace_curve(appendix.center_map, 0.5, 5.0, n0=8, max_points=50)
    p = tmp_path / "c.csv"
    appendix.write_curve_csv(p, pts)
    assert p.read_text().splitlines()[0] == "parameter,angle,radius"


@pytest.mark.parametrize("orbit", [lambda: appendix.center_orbit(68.58, dense=True),
                                   lambda: appendix.cone_orbit(-9.52, dense=True)],
                         ids=["center", "cone"])
def test_integrated_angle_matches_arctan_mod_pi(orbit):
    tr = orbit()
    U, dU, ang = tr.ys.T
    diff = ang - np.arctan(dU / U)
    wrapped = (diff + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    assert np.max(np.abs(wrapped)) < 1e-8
