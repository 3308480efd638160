"""Regular-at-the-origin orbits of f'' + f^3/sinh^2(x) = 0 in the (b, d, phase) variables.

b = f - x f', d = f', and the phase obeys phi' = f^4 / (sinh^2(x) (b^2 + d^2)),
so phi = arctan(b/d) unwrapped with phi(0) = 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import ode
from .errors import InfiniteEnergy, InvalidInput, SeriesDomainError

X_FIRST = 12.0
REGULARITY_TOL = 1e-6

_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(24)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _f_coeffs(c):
    """Odd Taylor coefficients of f at the origin: f = sum a_k x^(2k+1), k = 0..4."""
    c2 = c * c
    c3 = c2 * c
    return (
        c,
        -c3 / 6.0,
        c3 * (3.0 * c2 + 2.0) / 120.0,
        -c3 * (19.0 * c2 * c2 + 26.0 * c2 + 8.0) / 5040.0,
        c3 * (619.0 * c2**3 + 1284.0 * c2 * c2 + 828.0 * c2 + 160.0) / 1088640.0,
    )


def series_f(c, x):
    """f and f' from the origin series (valid for c*x << 1)."""
    a = _f_coeffs(c)
    x = np.asarray(x, dtype=float)
    x2 = x * x
    f = x * (a[0] + x2 * (a[1] + x2 * (a[2] + x2 * (a[3] + x2 * a[4]))))
    fp = a[0] + x2 * (3 * a[1] + x2 * (5 * a[2] + x2 * (7 * a[3] + x2 * 9 * a[4])))
    return f, fp


@dataclass(frozen=True)
class OrbitState:
    x: float
    b: float
    d: float
    phi: float

    @property
    def f(self) -> float:
        return self.b + self.x * self.d


def default_start(c: float) -> float:
    return 1e-3 / max(1.0, abs(c))


def series_start(c: float, x0: float, abs_tol: float = ode.DEFAULT_ATOL) -> OrbitState:
    """State at ``x0`` from the origin expansion through x^9."""
    if not c > 0:
        raise InvalidInput("series_start needs c > 0")
    if not (0 < x0 <= 0.01 / max(1.0, c)):
        raise SeriesDomainError(f"x0={x0} outside (0, 0.01/max(1,c)]", c=c)
    # first omitted term scales like c (c x0)^10
    if c * (c * x0) ** 10 > abs_tol:
        raise SeriesDomainError("x0 too large for requested tolerance", c=c, x0=x0)
    f, fp = series_f(c, x0)
    b = float(f - x0 * fp)
    d = float(fp)
    return OrbitState(x0, b, d, math.atan2(b, d))


@dataclass
class COrbitSummary:
    c: float
    B: float
    D: float
    Phi: float
    x_max: float
    trajectory: ode.Trajectory | None
    sign: float = 1.0

    def state(self, x):
        """(b, d, phi) at ``x`` (array), series below the start radius."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((len(x), 3))
        x0 = self.trajectory.xs[0]
        lo = x < x0
        if np.any(lo):
            f, fp = series_f(abs(self.c), x[lo])
            out[lo, 0] = f - x[lo] * fp
            out[lo, 1] = fp
            out[lo, 2] = np.arctan2(out[lo, 0], out[lo, 1])
        hi = ~lo
        if np.any(hi):
            out[hi] = self.trajectory(np.minimum(x[hi], self.x_max))
        out[:, :2] *= self.sign
        return out

    def f(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = self.state(x)
        return s[:, 0] + x * s[:, 1]

    def fprime(self, x):
        return self.state(x)[:, 1]

    def profile(self, num: int = 2001, x_hi: float | None = None):
        """Sampled (x, f) on [0, x_hi]."""
        xs = np.linspace(0.0, self.x_max if x_hi is None else x_hi, num)
        return xs, self.f(xs)

    def rows(self, num: int = 2001):
        """CSV rows (x, f, b, d, phi, G)."""
        xs = np.linspace(0.0, self.x_max, num)
        s = self.state(xs)
        f = s[:, 0] + xs * s[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            G = 2 * s[:, 1] ** 2 + np.where(xs > 0, f**4 / np.sinh(xs) ** 2, 0.0)
        G[0] = 2 * s[0, 1] ** 2
        return np.column_stack([xs, f, s[:, 0], s[:, 1], s[:, 2], G])

    def write_csv(self, path, num: int = 2001):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "f", "b", "d", "phi", "G"])
            for row in self.rows(num):
                w.writerow([f"{v:.9g}" for v in row])


def _tail(b, d, X):
    """Leading tail integrals beyond X for (B, D, Phi) with f ~ b + d x and sinh^-2 ~ 4 e^{-2x}."""
    xi = X + 0.5 * _LAG_X
    w = 0.5 * _LAG_W * math.exp(-2.0 * X)
    f = b + d * xi
    q = 4.0 * f**3 / (1.0 - np.exp(-2.0 * xi)) ** 2
    r2 = b * b + d * d
    dB = float(np.dot(w, xi * q))
    dD = -float(np.dot(w, q))
    dPhi = float(np.dot(w, f * q)) / r2 if r2 > 0 else 0.0
    return dB, dD, dPhi


def _tail_bound(b, d, X):
    return 4.0 * (abs(b) + abs(d) * (X + 2.0)) ** 3 * math.exp(-2.0 * X) * (X + 2.0)


def _join(a: ode.Trajectory, b: ode.Trajectory) -> ode.Trajectory:
    coeffs = np.concatenate([a.coeffs, b.coeffs]) if a.has_dense else a.coeffs
    return ode.Trajectory(
        np.concatenate([a.xs, b.xs[1:]]),
        np.concatenate([a.ys, b.ys[1:]]),
        coeffs,
        b.termination,
        a.nfev + b.nfev,
    )


def evolve_c_orbit(
    c: float,
    tol: float = 1e-10,
    rel_tol: float = ode.DEFAULT_RTOL,
    abs_tol: float = ode.DEFAULT_ATOL,
    dense: bool = True,
    x_min_end: float = 0.0,
) -> COrbitSummary:
    """Integrate the c-orbit and return the limits B, D and total phase Phi.

    Negative ``c`` is obtained from the odd symmetry f -> -f.
    """
    if c == 0:
        raise InvalidInput("c = 0 is the trivial solution")
    sign = 1.0 if c > 0 else -1.0
    c = abs(c)
    st = series_start(c, default_start(c), abs_tol)
    y0 = [st.b, st.d, st.phi]
    X1 = max(X_FIRST, x_min_end)
    tr = ode.integrate_system("orbit", (), st.x, X1, y0, rel_tol, abs_tol, dense=dense)
    b, d, _ = tr.ys[-1]
    X = X1
    while _tail_bound(b, d, X) > 1e-3 * tol and X < 60.0:
        X += 1.0
    if X > X1:
        tr2 = ode.integrate_system("orbit", (), X1, X, tr.ys[-1], rel_tol, abs_tol, dense=dense)
        tr = _join(tr, tr2)
    b, d, phi = tr.ys[-1]
    dB, dD, dPhi = _tail(b, d, X)
    return COrbitSummary(
        c * sign, float(sign * (b + dB)), float(sign * (d + dD)), float(phi + dPhi), X, tr if dense else None, sign
    )


def phase_total(c: float, rel_tol: float = ode.DEFAULT_RTOL, abs_tol: float = ode.DEFAULT_ATOL) -> float:
    """Phi(c) without storing the dense trajectory."""
    return evolve_c_orbit(c, rel_tol=rel_tol, abs_tol=abs_tol, dense=False).Phi


@dataclass(frozen=True)
class EnergyValue:
    E: float


def _gl_nodes(a, b):
    """Composite Gauss-Legendre nodes/weights over consecutive intervals [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    xs = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    ws = (half[:, None] * _GL_W[None, :]).ravel()
    return xs, ws


def static_energy(summary: COrbitSummary, reg_tol: float = REGULARITY_TOL) -> EnergyValue:
    """E = 1/2 int (f'^2 - f^4 / (2 sinh^2 x)) dx for a regular (D = 0) orbit."""
    if abs(summary.D) > reg_tol:
        raise InfiniteEnergy(f"|D| = {abs(summary.D):.3g} exceeds {reg_tol:g}", D=summary.D)
    tr = summary.trajectory
    if tr is None:
        raise InvalidInput("energy needs a dense trajectory")
    knots = np.concatenate([[0.0], tr.xs])
    xs, ws = _gl_nodes(knots[:-1], knots[1:])
    s = summary.state(xs)
    f = s[:, 0] + xs * s[:, 1]
    integrand = s[:, 1] ** 2 - f**4 / (2.0 * np.sinh(xs) ** 2)
    E = 0.5 * float(np.dot(ws, integrand))
    X = summary.x_max
    b = summary.B
    E += 0.5 * (b**6 * math.exp(-4 * X) - b**4 * math.exp(-2 * X))
    return EnergyValue(E)


def count_zeros(summary: COrbitSummary, per_step: int = 8) -> int:
    """Sign changes of f on (0, x_max], sampled ``per_step`` times per accepted step."""
    tr = summary.trajectory
    u = np.linspace(0.0, 1.0, per_step, endpoint=False)
    xs = (tr.xs[:-1, None] + np.diff(tr.xs)[:, None] * u[None, :]).ravel()
    xs = np.append(xs, tr.xs[-1])
    f = summary.f(xs)
    sg = np.sign(f[1:])
    sg = sg[sg != 0]
    return int(np.count_nonzero(sg[1:] != sg[:-1]))


def rescaled_limit_profile(c: float, y_max: float, num: int = 1001, rel_tol=ode.DEFAULT_RTOL,
                           abs_tol=ode.DEFAULT_ATOL):
    """F(y) = f(y/c); ``c = math.inf`` gives the limiting problem F'' + F^3/y^2 = 0."""
    y0 = 1e-3
    if math.isinf(c):
        a = (1.0, -1.0 / 6.0, 1.0 / 40.0, -19.0 / 5040.0)
        F0 = y0 * (a[0] + y0**2 * (a[1] + y0**2 * (a[2] + y0**2 * a[3])))
        G0 = a[0] + y0**2 * (3 * a[1] + y0**2 * (5 * a[2] + y0**2 * 7 * a[3]))
        p = (0.0,)
    else:
        if not c > 0:
            raise InvalidInput("c must be positive or inf")
        y0 = min(y0, 1e-3 * c)
        f, fp = series_f(c, y0 / c)
        F0, G0 = float(f), float(fp) / c
        p = (c,)
    tr = ode.integrate_system("limit", p, y0, y_max, [F0, G0], rel_tol, abs_tol)
    ys = np.linspace(y0, y_max, num)
    return ys, tr(ys)[:, 0], tr


@lru_cache(maxsize=None)
def _phase_law_coefficient():
    """pi^4/30 via quadrature of xi^4 / sinh^2(xi)."""
    def g(x):
        if x == 0:
            return 0.0
        if x > 30:
            return 4 * x**4 * math.exp(-2 * x)
        return x**4 / math.sinh(x) ** 2
    return ode.quadrature(g, 0.0, math.inf, 1e-12)


def figure1_point(c: float, **kw):
    """(bbar, dbar) with sigma = ((B+8D)^2 + D^2)^(1/6)."""
    s = evolve_c_orbit(c, dense=False, **kw)
    u = s.B + 8 * s.D
    sigma = (u * u + s.D * s.D) ** (1.0 / 6.0)
    return u / sigma, s.D / sigma, s
