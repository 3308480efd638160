import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial as P

from cubicwave import exterior
from cubicwave.errors import InvalidInput, PreconditionViolation

SQRT2 = math.sqrt(2.0)


def _rho_residual(U, rho):
    """rho times the equation applied to polynomial U(t), where rho = rho(t) is also a polynomial."""
    d1, d2 = U.deriv(1), U.deriv(2)
    return rho * (1 - rho**2) * d2 + (2 - 4 * rho**2) * d1 - 2 * rho * U + rho * U**3


@given(c=st.floats(0.2, 20.0))
@settings(max_examples=20, deadline=None)
def test_center_series_solves_equation_through_order_five(c):
    a = exterior.center_coefficients(c)
    U = P([a[0], 0, a[1], 0, a[2], 0, a[3]])
    R = _rho_residual(U, P([0.0, 1.0])).coef
    scale = max(1.0, c) ** 9
    assert np.all(np.abs(R[:6]) <= 1e-12 * scale)


@given(b=st.floats(0.2, 20.0))
@settings(max_examples=20, deadline=None)
def test_cone_series_solves_equation_through_order_three(b):
    # expansion variable s = rho - 1
    U = P(exterior.cone_coefficients(b))
    R = _rho_residual(U, P([1.0, 1.0])).coef
    scale = max(1.0, b) ** 11
    assert np.all(np.abs(R[:4]) <= 1e-12 * scale)


def test_series_domains():
    with pytest.raises(InvalidInput):
        exterior.rho_series_center(1.0, 0.1)
    with pytest.raises(InvalidInput):
        exterior.rho_series_cone(1.0, 0.1)
    with pytest.raises(InvalidInput):
        exterior.rho_series_cone(1.0, 1e-3, side="middle")


def test_cone_fixed_point_stays_put():
    rep = exterior.b_orbit(SQRT2, "out", 100.0)
    assert rep.outcome == "regular_to"
    assert np.max(np.abs(rep.monitors["U"] - SQRT2)) < 1e-8


def test_large_b_blows_up_outside():
    rep = exterior.b_orbit(4.0, "out", 100.0)
    assert rep.outcome == "singular_at"
    assert 1.0 < rep.rho_sing < rep.rho_end + 1e-3


def test_negative_b_mirrors():
    p = exterior.b_orbit(3.0, "out")
    m = exterior.b_orbit(-3.0, "out")
    assert p.rho_sing == pytest.approx(m.rho_sing, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_singularity_converges(solve, n):
    est = exterior.exterior_singularity(solve(n))
    assert est.rho > 1.0
    assert est.drift < 1e-3
    assert est.bridge_cone_error < 1e-5
    assert est.bridge_center_error < 1e-5


def test_ground_state_precondition(solve):
    with pytest.raises(PreconditionViolation):
        exterior.exterior_singularity(solve(0))


def test_discriminant_and_N_at_corners():
    # N(U, 0) = 2 and N(U, 1) = 0 for the closed form
    assert exterior.N_function(0.7, 0.0) == pytest.approx(2.0)
    assert exterior.N_function(0.7, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert exterior.discriminant(1.0, 0.5) == pytest.approx(1 - 0.25 * 0.75 * 3)


def test_gprime_derived_matches_finite_difference():
    # along an orbit, where g crosses zero the derived g' formula should match d/drho g
    rho, U = 2.0, 1.8
    # choose U' so that g = 0
    dU = rho**3 * (U * U - 2) / 6 / (rho**4 * U)
    h = 1e-6
    # U'' from the ODE
    ddU = -((2 / rho - 4 * rho) * dU - 2 * U + U**3) / (1 - rho**2)
    g = lambda r, u, du: exterior.monitor_g(r, u, du)
    gp = (g(rho + h, U + h * dU + 0.5 * h * h * ddU, dU + h * ddU)
          - g(rho - h, U - h * dU + 0.5 * h * h * ddU, dU - h * ddU)) / (2 * h)
    assert exterior.gprime_derived(rho, U) == pytest.approx(gp, rel=1e-6)


def test_certificate_small_grid():
    cert = exterior.certify_inequalities(120, outward_b=[1.6, 3.0], inward_b=[0.5, 1.2])
    assert cert.passed
    assert cert.N_min >= -exterior.CERT_TOL


def test_certificate_grid_floor():
    with pytest.raises(InvalidInput):
        exterior.certify_inequalities(50)


def test_monitor_csv(tmp_path):
    rep = exterior.b_orbit(2.0, "in")
    p = tmp_path / "m.csv"
    rep.write_csv(p)
    assert p.read_text().splitlines()[0] == "rho,U,dU,h,g,n"


@pytest.mark.parametrize("b", [1.6, 2.0, 5.0])
def test_g_at_cone_from_series(b):
    # U(1) = b, U'(1) = b(b^2 - 2)/2 give g(1) = (b^2 - 2)(3b^2 - 1)/6
    k = exterior.cone_coefficients(b)
    assert exterior.monitor_g(1.0, k[0], k[1]) == pytest.approx((b * b - 2) * (3 * b * b - 1) / 6)


def test_integrated_inequality_b2():
    # the b = 2 orbit is singular before rho = 4, so the inequality is checked on its whole range
    rep = exterior.b_orbit(2.0, "out", 100.0)
    assert rep.outcome == "singular_at" and 2.0 < rep.rho_sing < 4.0
    m = rep.monitors
    ok = np.abs(m["U"]) < 1e6
    lhs = (m["U"][ok] - SQRT2) / (m["U"][ok] + SQRT2)
    rhs = (2 - SQRT2) / (2 + SQRT2) * m["rho"][ok] ** (1 / (3 * SQRT2))
    assert np.all(lhs >= rhs)
