import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubicwave import interior
from cubicwave.errors import InfiniteEnergy, InvalidInput, SeriesDomainError

SQRT2 = math.sqrt(2.0)


def test_ground_state_is_tanh():
    s = interior.evolve_c_orbit(SQRT2)
    xs = np.linspace(0.0, 10.0, 201)
    np.testing.assert_allclose(s.f(xs), SQRT2 * np.tanh(xs), atol=1e-9)
    assert s.B == pytest.approx(SQRT2, rel=1e-9)
    assert abs(s.D) < 1e-9
    assert s.Phi == pytest.approx(math.pi / 2, abs=1e-9)


@pytest.mark.parametrize("c", [0.5, 3.0, 40.0])
def test_origin_series_solves_profile_equation(c):
    # central second difference of the series vs -f^3/sinh^2
    x = 1e-3 / c
    h = x * 1e-2
    f = lambda t: interior.series_f(c, t)[0]
    fpp = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    assert fpp == pytest.approx(-f(x) ** 3 / math.sinh(x) ** 2, rel=1e-5)


def test_series_start_domain():
    with pytest.raises(SeriesDomainError):
        interior.series_start(10.0, 0.5)
    with pytest.raises(InvalidInput):
        interior.series_start(-1.0, 1e-4)


def test_zero_c_rejected():
    with pytest.raises(InvalidInput):
        interior.evolve_c_orbit(0.0)


@given(c=st.floats(0.1, 30.0))
@settings(max_examples=10, deadline=None)
def test_odd_symmetry(c):
    p = interior.evolve_c_orbit(c, dense=False)
    m = interior.evolve_c_orbit(-c, dense=False)
    assert m.B == -p.B and m.D == -p.D and m.Phi == p.Phi


@given(c=st.floats(0.1, 50.0))
@settings(max_examples=15, deadline=None)
def test_lyapunov_and_phase_monotone(c):
    s = interior.evolve_c_orbit(c)
    tr = s.trajectory
    x = tr.xs
    b, d, phi = tr.ys.T
    f = b + x * d
    G = 2 * d**2 + f**4 / np.sinh(x) ** 2
    tol = 10 * (1e-10 * np.abs(G[1:]) + 1e-12)
    assert np.all(np.diff(G) <= tol)
    assert np.all(np.diff(phi) >= -10 * (1e-10 * np.abs(phi[1:]) + 1e-12))


def test_small_c_phase_law():
    c = 1e-2
    assert interior.phase_total(c) / c**2 == pytest.approx(math.pi**4 / 30, rel=1e-3)
    assert interior._phase_law_coefficient() == pytest.approx(math.pi**4 / 30, rel=1e-11)


def test_energy_of_ground_state():
    assert interior.static_energy(interior.evolve_c_orbit(SQRT2)).E == pytest.approx(1 / 3, rel=1e-9)


def test_energy_rejects_singular_orbit():
    with pytest.raises(InfiniteEnergy):
        interior.static_energy(interior.evolve_c_orbit(3.0))


def test_zero_count_of_ground_state():
    assert interior.count_zeros(interior.evolve_c_orbit(SQRT2)) == 0


def test_large_c_rescaled_profile_approaches_limit():
    ys, F_inf, _ = interior.rescaled_limit_profile(math.inf, 5.0, num=51)
    _, F_c, _ = interior.rescaled_limit_profile(1e4, 5.0, num=51)
    assert np.max(np.abs(F_c - F_inf)) < 1e-3


def test_profile_csv(tmp_path):
    s = interior.evolve_c_orbit(SQRT2)
    p = tmp_path / "p.csv"
    s.write_csv(p, num=11)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,f,b,d,phi,G"
    assert len(lines) == 12


def test_figure1_normalization():
    bb, dd, s = interior.figure1_point(2.0)
    sigma = ((s.B + 8 * s.D) ** 2 + s.D**2) ** (1 / 6)
    assert bb == pytest.approx((s.B + 8 * s.D) / sigma)
    assert dd == pytest.approx(s.D / sigma)
