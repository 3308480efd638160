import math

import numpy as np
import pytest
from scipy import integrate, special

from cubicwave import asymptotics
from cubicwave.errors import InvalidInput


@pytest.fixture(scope="module")
def k():
    return asymptotics.compute_constants()


def test_period_constants_against_scipy(k):
    assert k.T == pytest.approx(0.5 * special.beta(1 / 6, 1 / 3), rel=1e-12)
    # endpoint singularity handled by the algebraic weight (1 - z)^(-1/2)
    ref, _ = integrate.quad(lambda z: ((1 + z) * (1 + z * z)) ** -0.5, 0, 1,
                            weight="alg", wvar=(0, -0.5), epsabs=1e-14, epsrel=1e-14)
    assert k.tau == pytest.approx(4 * math.sqrt(2) * ref, rel=1e-12)


def test_two_routes_agree(k):
    assert k.routes["T_discrepancy"] < 1e-9
    assert k.routes["tau_discrepancy"] < 1e-9


def test_period_of_cubic_oscillator(k):
    # amplitude-one orbit of v'' + v^3 = 0 has period tau
    sol = integrate.solve_ivp(lambda t, y: [y[1], -y[0] ** 3], (0, 20), [1.0, 0.0],
                              rtol=1e-12, atol=1e-14, dense_output=True,
                              events=lambda t, y: y[1])
    turns = sol.t_events[0]
    turns = turns[turns > 1e-9]
    assert turns[1] == pytest.approx(k.tau, rel=1e-8)


def test_frame_series_matches_quadrature():
    x = 1e-3
    ref, _ = integrate.quad(lambda s: np.sinh(s) ** (-2 / 3), 0, x, epsabs=1e-15, epsrel=1e-13)
    assert float(asymptotics.frame_t_series(x)) == pytest.approx(ref, rel=1e-10)
    assert asymptotics.frame_t(2.0) == pytest.approx(
        integrate.quad(lambda s: np.sinh(s) ** (-2 / 3), 0, 2.0, epsrel=1e-12)[0], rel=1e-9)


def test_predict_is_monotone_and_alternating(k):
    cs, bs = zip(*(asymptotics.predict(n, k) for n in range(8)))
    assert all(np.diff(cs) > 0)
    assert all(np.sign(b) == (-1) ** n for n, b in enumerate(bs))
    for c, b in zip(cs, bs):
        assert b * b / c == pytest.approx(k.b2_over_c, rel=1e-12)


def test_predict_rejects_negative():
    with pytest.raises(InvalidInput):
        asymptotics.predict(-1)


def test_modulation_equation_residual_small(solve):
    sol = solve(4)
    rep = asymptotics.modulation_decompose(sol.orbit, sol.c_n, sol.b_n, 4)
    assert rep["residual_relative"] < 1e-4
    assert rep["zeros_of_v"] == 4
    assert rep["inner_amplitude_measured"] == pytest.approx(rep["inner_amplitude_prediction"], rel=0.05)
    assert rep["outer_amplitude_measured"] == pytest.approx(rep["outer_amplitude_prediction"], rel=0.05)
