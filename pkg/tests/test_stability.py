import math

import numpy as np
import pytest

from cubicwave import stability


@pytest.mark.parametrize("n", range(4))
def test_negative_count_is_n_plus_one(spectrum_of, n):
    rep = spectrum_of(n)
    assert rep.negative_count == n + 1
    assert rep.node_counts == list(range(n + 1))
    assert rep.gap_count == 0


@pytest.mark.parametrize("n", range(4))
def test_gauge_eigenvalue(spectrum_of, n):
    rep = spectrum_of(n)
    assert min(abs(l + 1.0) for l in rep.eigenvalues) < 1e-6
    assert rep.gauge_residual < 1e-5
    assert rep.gauge_nodes == n


def test_ground_state_potential_is_poschl_teller(solve):
    pot = stability.build_potential(solve(0))
    xs = np.linspace(0.01, 20, 400)
    np.testing.assert_allclose(pot(xs), -6 / np.cosh(xs) ** 2, atol=1e-9)


def test_poschl_teller_single_odd_bound_state(spectrum_of):
    rep = spectrum_of(0)
    assert rep.eigenvalues == pytest.approx([-1.0], abs=1e-8)


def test_shooting_and_matrix_agree(spectrum_of):
    rep = spectrum_of(2)
    np.testing.assert_allclose(rep.eigenvalues, rep.matrix_eigenvalues, rtol=1e-5)
    assert rep.method_agreement < 1e-5


def test_counting_function_steps(solve):
    pot = stability.build_potential(solve(1))
    lams, _ = stability.shooting_eigenvalues(pot)
    assert stability.count_below(pot, lams[0] - 1e-3) == 0
    assert stability.count_below(pot, 0.5 * (lams[0] + lams[1])) == 1
    assert stability.count_below(pot, -1e-4) == 2


def test_eigenfunction_csv(tmp_path, solve):
    pot = stability.build_potential(solve(1))
    p = tmp_path / "e.csv"
    stability.write_eigenfunctions_csv(p, pot, points=400)
    head = p.read_text().splitlines()[0].split(",")
    assert head[0] == "x" and len(head) == 3
