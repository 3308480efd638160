"""Point spectrum of L = -d^2/dx^2 + V(x), V = -3 f^2 / sinh^2(x), on (0, inf) with xi(0) = 0.

Eigenvalues are found twice: by double-ended Pruefer shooting (mismatch
angle counts the eigenvalues below a trial value) and by a finite-difference
matrix on a mapped grid with Richardson extrapolation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from . import interior, ode
from .errors import InvalidInput, SpectralFailure

CONTINUUM_GUARD = 1e-4
SHOOT_RTOL = 1e-12
SHOOT_ATOL = 1e-13
MATRIX_POINTS = 4000


@dataclass
class PotentialProfile:
    """V sampled on a grid, plus evaluation anywhere through the underlying orbit."""

    n: int
    x: np.ndarray
    V: np.ndarray
    tail_coefficient: float  # V ~ tail_coefficient * exp(-2x)
    orbit: interior.COrbitSummary = field(repr=False)
    truncation: float = 30.0

    @property
    def c(self) -> float:
        return abs(self.orbit.c)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        small = x < 1e-3 / max(1.0, self.c)
        # f/sinh -> c at the origin
        xs = x[small]
        if xs.size:
            f, _ = interior.series_f(self.c, xs)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(xs > 0, f / np.sinh(np.where(xs > 0, xs, 1.0)), self.c)
            out[small] = -3.0 * ratio**2
        mid = ~small & (x <= self.orbit.x_max)
        if np.any(mid):
            f = self.orbit.f(x[mid])
            out[mid] = -3.0 * f**2 / np.sinh(x[mid]) ** 2
        far = x > self.orbit.x_max
        if np.any(far):
            b = self.orbit.B
            out[far] = -3.0 * b**2 / np.sinh(x[far]) ** 2
        return out

    @property
    def minimum(self) -> float:
        return float(self.V.min())

    def turning_point(self, lam: float) -> float:
        """Outermost x with V(x) <= lam (the argmin of V when lam is below the well)."""
        idx = np.nonzero(self.V <= lam)[0]
        if idx.size == 0:
            return float(self.x[int(np.argmin(self.V))])
        return float(self.x[idx[-1]])


def build_potential(solution, truncation: float | None = None, num: int = 4000) -> PotentialProfile:
    orbit = solution.orbit
    X = truncation if truncation is not None else max(30.0, orbit.x_max + 10.0)
    c = abs(solution.c_n)
    x0 = 1e-3 / max(1.0, c)
    xs = np.concatenate([[0.0], np.geomspace(x0, X, num)])
    pot = PotentialProfile(solution.n, xs, np.empty(0), -12.0 * orbit.B**2, orbit, X)
    pot.V = pot(xs)
    return pot


# shooting ------------------------------------------------------------------

def _scale(pot, lam):
    return math.sqrt(max(1.0, lam - pot.minimum))


def _left_angle(pot, lam, xm, S):
    c = pot.c
    st = interior.series_start(c, interior.default_start(c))
    sgn = pot.orbit.sign
    # xi = x + (V(0) - lam) x^3 / 6 + ...
    q = (-3.0 * c * c - lam) * st.x**2
    y0 = [sgn * st.b, sgn * st.d, math.atan(S * st.x * (1.0 + q / 6.0) / (1.0 + q / 2.0))]
    if xm <= st.x:
        return y0[2]
    tr = ode.integrate_system("prufer", (lam, S), st.x, xm, y0, SHOOT_RTOL, SHOOT_ATOL, dense=False)
    return float(tr.ys[-1, 2])


def _right_angle(pot, lam, xm, S):
    kappa = math.sqrt(-lam)
    X = pot.truncation
    y0 = [pot.orbit.B, pot.orbit.D, math.pi - math.atan(S / kappa)]
    tr = ode.integrate_system("prufer", (lam, S), X, xm, y0, SHOOT_RTOL, SHOOT_ATOL, dense=False)
    return float(tr.ys[-1, 2])


def mismatch(pot: PotentialProfile, lam: float, xm: float | None = None) -> float:
    """theta_L(xm) - theta_R(xm); equals k*pi exactly at the k-th eigenvalue."""
    if not lam < 0:
        raise InvalidInput("trial eigenvalue must be negative")
    if xm is None:
        xm = pot.turning_point(lam)
    xm = min(max(xm, 2e-3 / max(1.0, pot.c)), pot.truncation - 1.0)
    S = _scale(pot, lam)
    return _left_angle(pot, lam, xm, S) - _right_angle(pot, lam, xm, S)


def count_below(pot: PotentialProfile, lam: float) -> int:
    return int(math.floor(mismatch(pot, lam) / math.pi)) + 1


def _isolate(pot, lo, hi, clo, chi, out, trace):
    """Bisect on the eigenvalue count until each bracket holds one eigenvalue."""
    if chi - clo <= 0:
        return
    if chi - clo == 1 and hi - lo < 1e-3 * max(1.0, abs(hi)):
        out.append((lo, hi, clo))
        return
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        raise SpectralFailure("eigenvalues not separable", bracket=(lo, hi), trace=trace)
    mid = 0.5 * (lo + hi)
    cm = count_below(pot, mid)
    trace.append((mid, cm))
    if not clo <= cm <= chi:
        raise SpectralFailure("eigenvalue count not monotone", bracket=(lo, hi), trace=trace)
    _isolate(pot, lo, mid, clo, cm, out, trace)
    _isolate(pot, mid, hi, cm, chi, out, trace)


def shooting_eigenvalues(pot: PotentialProfile, search_floor: float | None = None,
                         tol: float = 1e-12, guard: float = CONTINUUM_GUARD):
    floor = 1.5 * pot.minimum if search_floor is None else search_floor
    if not floor < 0:
        raise InvalidInput("search_floor must be negative")
    top = -guard
    c0, c1 = count_below(pot, floor), count_below(pot, top)
    trace = [(floor, c0), (top, c1)]
    if c0 != 0:
        raise SpectralFailure("eigenvalue below the search floor", trace=trace)
    brackets = []
    _isolate(pot, floor, top, c0, c1, brackets, trace)
    lams = []
    for lo, hi, k in brackets:
        xm = pot.turning_point(hi)
        g = lambda lam: mismatch(pot, lam, xm) - k * math.pi
        lams.append(brentq(g, lo, hi, xtol=tol * max(1.0, abs(lo)), rtol=1e-15, maxiter=200))
    return np.array(lams), trace


# matrix oracle -------------------------------------------------------------

def _mapped_grid(pot, m):
    xc = 1.0 / max(1.0, pot.c)
    L = pot.truncation
    s = np.linspace(0.0, 1.0, m + 2)
    return xc * np.expm1(s * math.log1p(L / xc))


def _fd_eigenvalues(pot, m, lo, hi):
    x = _mapped_grid(pot, m)
    h = np.diff(x)
    mass = 0.5 * (h[:-1] + h[1:])
    xi = x[1:-1]
    diag = (1.0 / h[:-1] + 1.0 / h[1:]) / mass + pot(xi)
    off = -1.0 / (h[1:-1] * np.sqrt(mass[:-1] * mass[1:]))
    # explicit abstol: the default (eps * ||T||) is coarse for graded grids
    w, v = eigh_tridiagonal(diag, off, select="v", select_range=(lo, hi),
                            lapack_driver="stebz", tol=1e-13)
    return w, v / np.sqrt(mass)[:, None], xi


def matrix_eigenvalues(pot: PotentialProfile, search_floor: float | None = None,
                       points: int = MATRIX_POINTS, levels: int = 4,
                       guard: float = CONTINUUM_GUARD):
    """Second-order FD on an exponential grid, extrapolated over ``levels`` doublings.

    Returns (eigenvalues, node counts of the finest eigenvectors).
    """
    floor = 1.5 * pot.minimum if search_floor is None else search_floor
    runs = []
    for j in range(levels):
        w, v, xi = _fd_eigenvalues(pot, points * 2**j, floor, -guard)
        runs.append((w, v, xi))
    counts = {len(r[0]) for r in runs}
    if len(counts) != 1:
        raise SpectralFailure("matrix eigenvalue count changes under refinement",
                              counts=[len(r[0]) for r in runs])
    table = [r[0] for r in runs]
    for order in range(1, levels):
        f = 4.0**order
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    w, v, xi = runs[-1]
    nodes = [_nodes(v[:, i]) for i in range(v.shape[1])]
    return table[0], nodes


def _nodes(vec, rel=1e-8):
    keep = np.abs(vec) > rel * np.max(np.abs(vec))
    s = np.sign(vec[keep])
    return int(np.count_nonzero(s[1:] != s[:-1]))


# report --------------------------------------------------------------------

@dataclass
class EigenReport:
    n: int
    eigenvalues: list
    negative_count: int
    gauge_residual: float
    method_agreement: float
    matrix_eigenvalues: list = field(default_factory=list)
    node_counts: list = field(default_factory=list)
    gauge_nodes: int = 0
    gap_count: int = 0
    truncation: float = 0.0

    def to_dict(self):
        return {
            "n": self.n,
            "eigenvalues": list(self.eigenvalues),
            "negative_count": self.negative_count,
            "gauge_residual": self.gauge_residual,
            "gauge_nodes": self.gauge_nodes,
            "method_agreement": self.method_agreement,
            "matrix_eigenvalues": list(self.matrix_eigenvalues),
            "node_counts": list(self.node_counts),
            "count_in_gap": self.gap_count,
            "truncation": self.truncation,
        }


def eigenvalues(potential: PotentialProfile, search_floor: float | None = None,
                tol: float = 1e-12, solution=None, matrix_points: int = MATRIX_POINTS) -> EigenReport:
    lams, _ = shooting_eigenvalues(potential, search_floor, tol)
    mat, nodes = matrix_eigenvalues(potential, search_floor, matrix_points)
    if len(mat) != len(lams):
        raise SpectralFailure("shooting and matrix oracle disagree on the count",
                              shooting=list(lams), matrix=list(mat))
    agreement = float(np.max(np.abs(lams - mat))) if len(lams) else 0.0
    gap = count_below(potential, -CONTINUUM_GUARD) - count_below(potential, -1.0 + CONTINUUM_GUARD)
    g_res, g_nodes = (gauge_mode_check(solution) if solution is not None else (math.nan, -1))
    return EigenReport(potential.n, [float(v) for v in lams], len(lams), g_res, agreement,
                       [float(v) for v in mat], nodes, g_nodes, gap, potential.truncation)


# gauge mode ----------------------------------------------------------------

_D2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])


def _xi(orbit, x):
    return np.sinh(x) * orbit.fprime(x)


def gauge_mode_check(solution, samples: int = 4000):
    """Residual of L xi + xi for xi = sinh(x) f'(x) and the node count of xi.

    The second derivative is taken by finite differences of the computed
    profile (not from the equation), with the local step following the
    profile's length scale. Norm: sup of |xi'' - (V+1) xi| / (1+|V|) over sup |xi|.
    """
    # dense-output error is amplified by 1/h^2, so re-integrate tightly at the same c
    orbit = interior.evolve_c_orbit(solution.c_n, rel_tol=1e-13, abs_tol=1e-15)
    pot = build_potential(solution)
    c = pot.c
    X = min(orbit.x_max, 25.0)
    x = np.geomspace(2e-2 / max(1.0, c), X - 0.5, samples)
    h = np.minimum(0.01, 0.025 * (x + 1.0 / max(1.0, c)))
    h = np.minimum(h, x / 4)
    offs = np.arange(-3, 4)
    pts = x[:, None] + h[:, None] * offs[None, :]
    xi = _xi(orbit, pts.ravel()).reshape(pts.shape)
    d2 = (xi @ _D2) / h**2
    xi0 = xi[:, 3]
    V = pot(x)
    scale = float(np.max(np.abs(xi0)))
    resid = float(np.max(np.abs(d2 - (V + 1.0) * xi0) / (1.0 + np.abs(V)))) / scale
    # a nonzero D adds D sinh(x) to xi; count nodes only where that is negligible
    keep = np.abs(xi0) > 100.0 * abs(orbit.D) * np.sinh(x) + 1e-12 * scale
    s = np.sign(xi0[keep])
    return resid, int(np.count_nonzero(s[1:] != s[:-1]))


def write_eigenfunctions_csv(path, pot: PotentialProfile, points: int = 4000):
    lo = 1.5 * pot.minimum
    w, v, xi = _fd_eigenvalues(pot, points, lo, -CONTINUUM_GUARD)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x"] + [f"xi_{i}" for i in range(len(w))])
        for j in range(len(xi)):
            wr.writerow([f"{xi[j]:.9g}"] + [f"{v[j, i]:.9g}" for i in range(len(w))])
