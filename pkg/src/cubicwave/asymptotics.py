"""Matched-asymptotics constants and the large-n predictions for c_n and b_n.

The modulation frame factorizes f(x) = a(x) v(t(x)) with a = sinh^(1/3) and
t' = sinh^(-2/3), turning the profile equation into v'' + v^3 + h v = 0.
Near either end the linear term reduces to -2/t^2 (inner) or 1/(4 tbar^2)
(outer); both model problems relax to the pure cubic oscillator, whose
amplitude A and phase theta against the reference F1 (F1(0) = 0, F1'(0) > 0)
are extracted here.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import ode
from .errors import InvalidInput, NonConvergence

SQRT2 = math.sqrt(2.0)
START = 1e-4
T_END = 4000.0
FIT_FROM = 100.0


def _sinh_m23(x):
    if x > 30:
        return (2.0 * math.exp(-x)) ** (2.0 / 3.0)
    return math.sinh(x) ** (-2.0 / 3.0)


def T_beta() -> float:
    return 0.5 * math.gamma(1 / 6) * math.gamma(1 / 3) / math.gamma(1 / 2)


def tau_beta() -> float:
    return SQRT2 * math.gamma(1 / 4) * math.gamma(1 / 2) / math.gamma(3 / 4)


def T_quadrature(tol: float = 1e-12) -> float:
    return ode.quadrature(_sinh_m23, 0.0, math.inf, tol)


def tau_quadrature(tol: float = 1e-12) -> float:
    return 4.0 * SQRT2 * ode.quadrature(lambda z: (1.0 - z**4) ** -0.5, 0.0, 1.0, tol)


@dataclass(frozen=True)
class AsymptoticConstants:
    T: float
    tau: float
    A0: float
    A1: float
    theta0: float
    theta1: float
    routes: dict = field(default_factory=dict, compare=False)

    def law_literals(self):
        """(tau/2, -(theta0+theta1), A0*T) -- the numbers in the closed-form c_n law."""
        return self.tau / 2.0, -(self.theta0 + self.theta1), self.A0 * self.T

    @property
    def b2_over_c(self) -> float:
        return (self.A0 / self.A1) ** 3

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def inner_start(t0: float = START):
    """v -> t^2/9 for v'' + v^3 - 2 v / t^2 = 0."""
    v = t0**2 / 9 - t0**8 / 39366 + t0**14 / 191318760
    w = 2 * t0 / 9 - 8 * t0**7 / 39366 + 14 * t0**13 / 191318760
    return v, w


def outer_start(s0: float = START):
    """v -> sqrt(2/3) s^(1/2) for v'' + v^3 + v / (4 s^2) = 0."""
    a = math.sqrt(2.0 / 3.0)
    v = a * (s0**0.5 - 2 / 27 * s0**3.5 + s0**6.5 / 243)
    w = a * (0.5 * s0**-0.5 - 7 / 27 * s0**2.5 + 6.5 / 243 * s0**5.5)
    return v, w


@dataclass
class OscillatorFit:
    amplitude: float
    theta: float
    zeros: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    drift: float


def _upward_zeros(tr, lo=0.0):
    xs, v = tr.xs, tr.ys[:, 0]
    idx = np.nonzero((v[:-1] < 0) & (v[1:] >= 0) & (xs[:-1] >= lo))[0]
    return np.array([brentq(lambda t: tr(t)[0], xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15)
                     for i in idx])


def fit_oscillator(coef: float, v0: float, w0: float, tau: float, t_end: float = T_END,
                   fit_from: float = FIT_FROM, tol: float = 1e-8, skip_periods: int = 0,
                   rel_tol: float = 1e-13, abs_tol: float = 1e-14) -> OscillatorFit:
    """Amplitude and phase of v'' + v^3 + coef v / t^2 = 0 as t -> infinity.

    At each upward zero z_k the oscillator energy is v'^2/2, giving A_k; the
    phase is theta_k = -A z_k (mod tau). Both sequences are extrapolated in 1/z.
    """
    tr = ode.integrate_system("oscillator", (coef,), START, t_end, [v0, w0], rel_tol, abs_tol)
    z = _upward_zeros(tr)
    if len(z) < 20:
        raise NonConvergence("too few oscillations to fit", zeros=len(z))
    Ak = (2.0 * np.array([tr(t)[1] for t in z]) ** 2) ** 0.25
    sel = np.nonzero(z >= fit_from)[0][skip_periods:]
    zi = 1.0 / z[sel]
    # the amplitude converges like 1/z^2 (no 1/z term)
    VA = np.column_stack([np.ones_like(zi), zi**2, zi**3, zi**4])
    cA, *_ = np.linalg.lstsq(VA, Ak[sel], rcond=None)
    A = float(cA[0])
    th = np.mod(-A * z + tau / 2, tau) - tau / 2
    VT = np.column_stack([np.ones_like(zi), zi, zi**2, zi**3])
    cT, *_ = np.linalg.lstsq(VT, th[sel], rcond=None)
    theta = float(np.mod(cT[0] + tau / 2, tau) - tau / 2)
    resid = float(np.max(np.abs(VA @ cA - Ak[sel])) / A)
    if resid > tol:
        raise NonConvergence("amplitude drift above tolerance", drift=resid)
    return OscillatorFit(A, theta, z, Ak, th, resid)


@lru_cache(maxsize=8)
def compute_constants(tol: float = 1e-8) -> AsymptoticConstants:
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    Tq, Tb = T_quadrature(), T_beta()
    tq, tb = tau_quadrature(), tau_beta()
    inner = fit_oscillator(-2.0, *inner_start(), tq, tol=tol)
    outer = fit_oscillator(0.25, *outer_start(), tq, tol=tol)
    routes = {
        "T_quadrature": Tq,
        "T_beta": Tb,
        "T_discrepancy": abs(Tq - Tb),
        "tau_quadrature": tq,
        "tau_beta": tb,
        "tau_discrepancy": abs(tq - tb),
        "A0_drift": inner.drift,
        "A1_drift": outer.drift,
    }
    return AsymptoticConstants(Tq, tq, inner.amplitude, outer.amplitude,
                               inner.theta, outer.theta, routes)


def predict(n: int, k: AsymptoticConstants | None = None):
    """(c_pred, b_pred) from the amplitude/phase matching conditions."""
    if n < 0:
        raise InvalidInput("n must be non-negative")
    k = k or compute_constants()
    c = (((n + 1) * k.tau / 2 - (k.theta0 + k.theta1)) / (k.A0 * k.T)) ** 3
    b = (-1) ** n * math.sqrt(k.b2_over_c * c)
    return c, b


# modulation frame ----------------------------------------------------------

def frame_a(x):
    return np.sinh(x) ** (1.0 / 3.0)


def frame_h(x):
    s = np.sinh(x)
    return (3 * s**2 - 2 * np.cosh(x) ** 2) / (9 * s ** (2.0 / 3.0))


def frame_t_series(x):
    """t(x) = int_0^x sinh^(-2/3) for small x."""
    x13 = np.cbrt(x)
    return 3 * x13 - x13**7 / 21 + 4 * x13**13 / 1755 - 67 * x13**19 / 484785


def frame_t(x, tol: float = 1e-12) -> float:
    x0 = min(x, 1e-3)
    t = float(frame_t_series(x0))
    if x > x0:
        t += ode.quadrature(_sinh_m23, x0, x, tol)
    return t


def frame_x_of_t(t_hi: float, x_start: float = 1e-4):
    """Dense x(t) from dx/dt = sinh^(2/3)(x), started on the small-x series."""
    t0 = float(frame_t_series(x_start))
    prob = ode.IntegrationProblem(lambda t, y: np.array([np.sinh(y[0]) ** (2.0 / 3.0)]),
                                  t0, t_hi, [x_start])
    return ode.integrate(prob, 1e-12, 1e-14), t0


def _d2_central(v, dt):
    """6th-order central second difference (interior points only)."""
    c = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    out = np.zeros(len(v) - 6)
    for j, cj in enumerate(c):
        out += cj * v[j: len(v) - 6 + j]
    return out / dt**2


def modulation_decompose(orbit, c_n: float, b_n: float, n: int, dt: float = 5e-3,
                         margin: float = 0.5, k: AsymptoticConstants | None = None):
    """v = f/a on a uniform t grid; residual of v'' + v^3 + h v and end amplitudes.

    ``orbit`` is a dense :class:`~cubicwave.interior.COrbitSummary`.
    """
    k = k or compute_constants()
    T = k.T
    lo, hi = margin, T - margin
    xt, t0 = frame_x_of_t(hi + 4 * dt)
    t = np.arange(max(t0, lo - 3 * dt), hi + 3.5 * dt, dt)
    x = xt(t)[:, 0]
    f = orbit.f(x)
    v = f / frame_a(x)
    vdd = _d2_central(v, dt)
    core = slice(3, len(v) - 3)
    r = vdd + v[core] ** 3 + frame_h(x[core]) * v[core]
    tc = t[core]
    win = (tc >= lo) & (tc <= hi)
    scale = max(1.0, float(np.max(np.abs(v[core][win]))) ** 3)
    residual = float(np.max(np.abs(r[win])))

    # amplitudes from the oscillator energy at the zeros of v
    vd = np.gradient(v, dt, edge_order=2)
    sgn = np.sign(v)
    zi = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    amps = []
    for i in zi:
        w = v[i] / (v[i] - v[i + 1])
        vdz = vd[i] + w * (vd[i + 1] - vd[i])
        amps.append(((t[i] + w * dt), (2 * vdz**2) ** 0.25))
    report = {
        "n": n,
        "residual_sup": residual,
        "residual_relative": residual / scale,
        "t_window": (lo, hi),
        "zeros_of_v": len(zi),
        "inner_amplitude_prediction": abs(c_n) ** (1 / 3) * k.A0,
        "outer_amplitude_prediction": abs(b_n) ** (2 / 3) * k.A1,
        "amplitude_at_zeros": amps,
    }
    if amps:
        report["inner_amplitude_measured"] = amps[0][1]
        report["outer_amplitude_measured"] = amps[-1][1]
    return report
