import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cubicwave import spectrum
from cubicwave.errors import InvalidInput

SQRT2 = math.sqrt(2.0)


def test_ground_state_exact(solve):
    s = solve(0)
    assert s.c_n == pytest.approx(SQRT2, rel=1e-10)
    assert s.b_n == pytest.approx(SQRT2, rel=1e-10)
    assert s.E_n == pytest.approx(1 / 3, rel=1e-10)


@pytest.mark.parametrize("n", range(5))
def test_nodal_class_and_phase(solve, n):
    s = solve(n)
    assert s.zeros == n
    assert s.Phi == pytest.approx((n + 0.5) * math.pi, abs=1e-9)
    assert np.sign(s.b_n) == (-1) ** n


@pytest.mark.parametrize("n", [1, 3])
def test_regular_profile_against_scipy(solve, n):
    # independent integrator from the origin series; the tail must stay bounded (D ~ 0)
    s = solve(n)
    c = s.c_n
    x0 = 1e-4 / c
    y0 = [c * x0 - c**3 * x0**3 / 6, c - c**3 * x0**2 / 2]
    sol = solve_ivp(lambda x, y: [y[1], -y[0] ** 3 / np.sinh(x) ** 2], (x0, 25.0), y0,
                    method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)
    assert sol.y[0, -1] == pytest.approx(s.b_n, rel=1e-7)
    assert abs(sol.y[1, -1]) < 1e-6
    xs = np.linspace(0.5, 10, 50)
    np.testing.assert_allclose(sol.sol(xs)[0], s.orbit.f(xs), atol=1e-7 * c)


def test_energy_against_quadrature(solve):
    # E_n = 1/2 int (f'^2 - f^4 / (2 sinh^2)) on an independently integrated profile
    from scipy.integrate import quad
    s = solve(2)
    c = s.c_n
    x0 = 1e-4 / c
    y0 = [c * x0 - c**3 * x0**3 / 6, c - c**3 * x0**2 / 2]
    sol = solve_ivp(lambda x, y: [y[1], -y[0] ** 3 / np.sinh(x) ** 2], (x0, 40.0), y0,
                    method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)

    def g(x):
        f, fp = sol.sol(x)
        return 0.5 * (fp * fp - f**4 / (2 * np.sinh(x) ** 2))

    knots = np.concatenate([np.geomspace(x0, 1, 100), np.linspace(1, 40, 100)[1:]])
    E = sum(quad(g, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0] for a, b in zip(knots[:-1], knots[1:]))
    E += 0.5 * c * c * x0
    assert s.E_n == pytest.approx(E, rel=1e-9)


def test_energy_increases(solve):
    E = [solve(n).E_n for n in range(5)]
    assert all(np.diff(E) > 0)


def test_negative_n_rejected():
    with pytest.raises(InvalidInput):
        spectrum.find_c_n(-1)
    with pytest.raises(InvalidInput):
        spectrum.table(-2)


def test_table_json_roundtrip():
    rows = spectrum.table(1)
    doc = json.loads(spectrum.table_json(rows))
    assert [r["n"] for r in doc] == [0, 1]
    assert rows[1].c_deviation == pytest.approx(rows[1].c_pred / rows[1].solution.c_n - 1)


def test_bracket_contains_single_root():
    (a, b), brackets, _ = spectrum.bracket_c_n(2)
    assert a < b
    assert spectrum.phase_residual(a, 2) * spectrum.phase_residual(b, 2) < 0
