"""Similarity-variable form of the self-similar equation and its behaviour past the light cone.

    (1 - rho^2) U'' + (2/rho - 4 rho) U' - 2 U + U^3 = 0

rho = 0 and rho = 1 are singular points; orbits leave them on local power
series and are never integrated across rho = 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import interior, ode
from .errors import CertificateFailure, InvalidInput, PreconditionViolation

SQRT2 = math.sqrt(2.0)
CONE_DELTA = 1e-4
BLOWUP = 1e8
CERT_TOL = 1e-12


@dataclass(frozen=True)
class RhoState:
    rho: float
    U: float
    dU: float


def center_coefficients(c):
    """Even Taylor coefficients (A0, A2, A4, A6) of U about rho = 0."""
    c2 = c * c
    return (
        c,
        c * (2 - c2) / 6,
        c * (c2 - 4) * (c2 - 2) / 40,
        -c * (c2 - 2) * (19 * c2 * c2 - 146 * c2 + 360) / 5040,
    )


def cone_coefficients(b):
    """Taylor coefficients (b, B1..B4) of U in powers of (rho - 1)."""
    b2 = b * b
    w = b * (b2 - 2)
    return (
        b,
        w / 2,
        w * (3 * b2 - 8) / 16,
        w * (7 * b2 * b2 - 32 * b2 + 48) / 96,
        w * (87 * b2**3 - 578 * b2 * b2 + 1384 * b2 - 1536) / 3072,
    )


def rho_series_center(c: float, delta: float) -> RhoState:
    if not 0 < delta <= 0.05:
        raise InvalidInput("delta must lie in (0, 0.05]")
    a = center_coefficients(c)
    r2 = delta * delta
    U = a[0] + r2 * (a[1] + r2 * (a[2] + r2 * a[3]))
    dU = delta * (2 * a[1] + r2 * (4 * a[2] + r2 * 6 * a[3]))
    return RhoState(delta, U, dU)


def rho_series_cone(b: float, delta: float, side: str = "outer") -> RhoState:
    if not 0 < delta <= 1e-2:
        raise InvalidInput("delta must lie in (0, 1e-2]")
    if side not in ("inner", "outer"):
        raise InvalidInput("side must be 'inner' or 'outer'")
    s = delta if side == "outer" else -delta
    k = cone_coefficients(b)
    U = k[0] + s * (k[1] + s * (k[2] + s * (k[3] + s * k[4])))
    dU = k[1] + s * (2 * k[2] + s * (3 * k[3] + s * 4 * k[4]))
    return RhoState(1.0 + s, U, dU)


# monitors ------------------------------------------------------------------

def monitor_h(rho, U, dU):
    return -dU / U


def monitor_g(rho, U, dU):
    return rho**4 * U * dU - rho**3 * (U * U - 2) / 6


def monitor_n(rho, U, dU):
    return (rho - rho**3) * dU**2 + (2 - 4 * rho**2) * U * dU - rho * U**2 * (2 - U**2)


def monitor_hprime(rho, U, dU):
    return monitor_n(rho, U, dU) / (rho * (1 - rho**2) * U**2)


@dataclass
class ExteriorReport:
    b: float
    direction: str
    outcome: str  # "regular_to" | "singular_at"
    rho_end: float
    rho_sing: float | None
    monitors: dict = field(repr=False)
    flagged: bool = False
    trajectory: ode.Trajectory | None = field(default=None, repr=False)

    def write_csv(self, path):
        m = self.monitors
        keys = ["rho", "U", "dU", "h", "g", "n"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for row in zip(*(m[k] for k in keys)):
                w.writerow([f"{v:.9g}" for v in row])

    def to_dict(self):
        return {
            "b": self.b,
            "direction": self.direction,
            "outcome": self.outcome,
            "rho_end": self.rho_end,
            "rho_sing": self.rho_sing,
            "flagged": self.flagged,
            "min_g": float(np.min(self.monitors["g"])),
            "max_n": float(np.max(self.monitors["n"])),
        }


def _sample(tr, per_step=4):
    u = np.linspace(0.0, 1.0, per_step, endpoint=False)
    xs = (tr.xs[:-1, None] + np.diff(tr.xs)[:, None] * u[None, :]).ravel()
    xs = np.append(xs, tr.xs[-1])
    return xs, tr(xs)


def continue_orbit(start: RhoState, direction: str, rho_limit: float,
                   rel_tol: float = ode.DEFAULT_RTOL, abs_tol: float = ode.DEFAULT_ATOL,
                   b: float | None = None) -> ExteriorReport:
    """Integrate away from ``start`` until ``rho_limit`` or blowup, recording h, g, n."""
    if direction not in ("in", "out"):
        raise InvalidInput("direction must be 'in' or 'out'")
    if start.rho <= 0 or start.rho == 1.0:
        raise InvalidInput("start must avoid the singular points rho = 0 and rho = 1")
    if (direction == "out") != (rho_limit > start.rho):
        raise InvalidInput("rho_limit lies on the wrong side of the start")
    tr = ode.integrate_system("rho", (), start.rho, rho_limit, [start.U, start.dU],
                              rel_tol, abs_tol, max_norm=BLOWUP)
    rho, Y = _sample(tr)
    U, dU = Y[:, 0], Y[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mon = {
            "rho": rho,
            "U": U,
            "dU": dU,
            "h": monitor_h(rho, U, dU),
            "g": monitor_g(rho, U, dU),
            "n": monitor_n(rho, U, dU),
            "hprime": monitor_hprime(rho, U, dU),
        }
    bval = b if b is not None else start.U
    if tr.termination.kind == "blowup":
        # U ~ a / (rho_s - rho) near the singularity, so rho_s - rho ~ U / U'
        Ue, dUe = tr.ys[-1]
        rho_s = float(tr.x_end + Ue / dUe) if dUe != 0 else float(tr.x_end)
        if direction == "in":
            rho_s = max(rho_s, 0.0)
        return ExteriorReport(bval, direction, "singular_at", float(tr.x_end), rho_s, mon, False, tr)
    flagged = direction == "out" and bval > SQRT2 * (1 + 1e-12)
    return ExteriorReport(bval, direction, "regular_to", float(tr.x_end), None, mon, flagged, tr)


def b_orbit(b: float, direction: str, rho_limit: float | None = None, delta: float = CONE_DELTA,
            rel_tol: float = ode.DEFAULT_RTOL, abs_tol: float = ode.DEFAULT_ATOL) -> ExteriorReport:
    """Orbit leaving the cone with U(1) = b. Negative b is mirrored through U -> -U."""
    b = abs(b)
    side = "outer" if direction == "out" else "inner"
    if rho_limit is None:
        rho_limit = 100.0 if direction == "out" else 1e-6
    st = rho_series_cone(b, delta, side)
    return continue_orbit(st, direction, rho_limit, rel_tol, abs_tol, b=b)


# bridge from the interior profile -----------------------------------------

def bridge_profile(orbit: interior.COrbitSummary, rho):
    """U(rho) = f(x) coth(x) with x = artanh(rho), for rho in [0, 1)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any((rho < 0) | (rho >= 1)):
        raise InvalidInput("bridge is defined for 0 <= rho < 1")
    x = np.arctanh(rho)
    out = np.full_like(rho, abs(orbit.c) * orbit.sign)
    pos = x > 0
    out[pos] = orbit.f(x[pos]) / np.tanh(x[pos])
    return out


def bridge_cone_error(orbit, b, xs=(6.0, 7.0, 8.0)):
    """max |f coth x - cone series| near rho = 1, with 1 - rho formed without cancellation."""
    err = 0.0
    for x in xs:
        e = math.exp(-2.0 * x)
        delta = 2.0 * e / (1.0 + e)
        st = rho_series_cone(abs(b), delta, "inner")
        U = float(orbit.f(x)[0]) / math.tanh(x)
        err = max(err, abs(abs(U) - st.U))
    return err


@dataclass
class SingularityEstimate:
    n: int
    b: float
    rho: float
    uncertainty: float
    drift: float
    runs: list = field(default_factory=list)
    bridge_cone_error: float = 0.0
    bridge_center_error: float = 0.0

    def __float__(self):
        return self.rho

    def to_dict(self):
        return {
            "n": self.n,
            "b": self.b,
            "rho_n": self.rho,
            "uncertainty": self.uncertainty,
            "relative_drift": self.drift,
            "runs": self.runs,
            "bridge_cone_error": self.bridge_cone_error,
            "bridge_center_error": self.bridge_center_error,
        }


def exterior_singularity(solution, rel_tol: float = ode.DEFAULT_RTOL,
                         abs_tol: float = ode.DEFAULT_ATOL) -> SingularityEstimate:
    """Blowup location past the cone for a computed self-similar solution.

    Two runs (delta, tol) and (delta/2, tol/2) give the refinement drift.
    """
    b = solution.b_n
    if abs(b) <= SQRT2:
        raise PreconditionViolation(f"|b_n| = {abs(b):.9g} does not exceed sqrt(2)", n=solution.n)
    orbit = solution.orbit
    cone_err = bridge_cone_error(orbit, b)
    r0 = 1e-3 / max(1.0, abs(solution.c_n))
    center_err = abs(float(bridge_profile(orbit, r0)[0]) - rho_series_center(solution.c_n, r0).U)
    runs = []
    for k in (1.0, 0.5):
        rep = b_orbit(b, "out", 1e3, CONE_DELTA * k, rel_tol * k, abs_tol * k)
        if rep.outcome != "singular_at":
            raise PreconditionViolation("outward orbit stayed regular", b=b, rho_end=rep.rho_end)
        runs.append({"delta": CONE_DELTA * k, "rel_tol": rel_tol * k,
                     "rho_sing": rep.rho_sing, "rho_end": rep.rho_end})
    r0, r1 = runs[0]["rho_sing"], runs[1]["rho_sing"]
    return SingularityEstimate(solution.n, b, r1, abs(r1 - r0), abs(r1 / r0 - 1.0), runs,
                               cone_err, center_err)


# inequality certificates ---------------------------------------------------

def discriminant(U, R):
    return 1.0 - R**2 * (1.0 - R**2) * (2.0 + U**2)


def N_function(U, R):
    D = np.maximum(discriminant(U, R), 0.0)
    return (D + R**2) * (1.0 - 2.0 * R**2 + np.sqrt(D)) + (1.0 - R**2) * R**4 * (U**2 - 2.0)


def gprime_factored(rho, U):
    """Factored closed form for g' on g = 0; differs from gprime_derived, both are checked."""
    return rho**2 * (U**2 - 2) * ((17 * U - 9) * rho**2 + U + 3) / (18 * (rho**2 - 1))


def gprime_derived(rho, U):
    """g' on g = 0, from differentiating g and eliminating U' and U''."""
    return (rho**2 * (U**2 - 2) * (36 * rho**2 * U**4 - 19 * rho**2 * U**2 - 2 * rho**2 + 7 * U**2 + 2)
            / (36 * U**2 * (rho**2 - 1)))


@dataclass
class Certificate:
    grid: int
    N_min: float
    N_argmin: tuple
    boundary_min: dict
    gprime_factored_min: float
    gprime_derived_min: float
    orbit_checks: dict
    passed: bool
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "grid": self.grid,
            "N_min": self.N_min,
            "N_argmin": list(self.N_argmin),
            "boundary_min": self.boundary_min,
            "gprime_factored_min": self.gprime_factored_min,
            "gprime_derived_min": self.gprime_derived_min,
            "orbit_checks": self.orbit_checks,
            "passed": self.passed,
            "violations": self.violations,
        }


def _outward_checks(bs, rel_tol, abs_tol):
    g_min, du_min, ineq_min, rate_min = math.inf, math.inf, math.inf, math.inf
    for b in bs:
        rep = b_orbit(b, "out", 1e3, rel_tol=rel_tol, abs_tol=abs_tol)
        m = rep.monitors
        rho, U, dU = m["rho"], m["U"], m["dU"]
        ok = np.abs(U) < 1e6
        g_min = min(g_min, float(np.min(m["g"][ok])))
        du_min = min(du_min, float(np.min(np.diff(U[ok]))))
        lhs = (U[ok] - SQRT2) / (U[ok] + SQRT2)
        rhs = (b - SQRT2) / (b + SQRT2) * rho[ok] ** (1.0 / (3.0 * SQRT2))
        ineq_min = min(ineq_min, float(np.min(lhs - rhs)))
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = dU[ok] / (U[ok] ** 2 - 2) - 1.0 / (6.0 * rho[ok])
        rate_min = min(rate_min, float(np.min(rate)))
    return g_min, du_min, ineq_min, rate_min


def _inward_checks(bs, rel_tol, abs_tol):
    worst = -math.inf
    for b in bs:
        rep = b_orbit(b, "in", 1e-6, rel_tol=rel_tol, abs_tol=abs_tol)
        m = rep.monitors
        ok = (m["rho"] < 1.0 - 2 * CONE_DELTA) & (np.abs(m["U"]) > 0)
        worst = max(worst, float(np.max(m["hprime"][ok])))
    return worst


def certify_inequalities(grid: int = 1000, outward_b=None, inward_b=None,
                         rel_tol: float = ode.DEFAULT_RTOL, abs_tol: float = ode.DEFAULT_ATOL,
                         strict: bool = True) -> Certificate:
    """Grid and orbit-sampled checks of the sign arguments used to rule out exterior regularity."""
    if grid < 100:
        raise InvalidInput("grid resolution must be at least 100")
    u = np.linspace(0.0, SQRT2, grid)
    r = np.linspace(0.0, 1.0, grid)
    UU, RR = np.meshgrid(u, r, indexing="ij")
    N = N_function(UU, RR)
    i, j = np.unravel_index(int(np.argmin(N)), N.shape)
    edge = np.linspace(0.0, 1.0, 20 * grid)
    uedge = np.linspace(0.0, SQRT2, 20 * grid)
    boundary = {
        "U=0": float(np.min(N_function(0.0, edge))),
        "U=sqrt2": float(np.min(N_function(SQRT2, edge))),
        "R=0": float(np.min(N_function(uedge, 0.0))),
        "R=1": float(np.min(N_function(uedge, 1.0))),
    }
    rho = np.linspace(1.0 + 1e-3, 50.0, grid)
    Ug = np.linspace(SQRT2 + 1e-3, 50.0, grid)
    PR, PU = np.meshgrid(rho, Ug, indexing="ij")
    gp_p = float(np.min(gprime_factored(PR, PU)))
    gp_d = float(np.min(gprime_derived(PR, PU)))

    if outward_b is None:
        outward_b = np.concatenate([SQRT2 + np.geomspace(1e-3, 1.0, 6), np.linspace(2.5, 25.0, 10)])
    if inward_b is None:
        inward_b = np.linspace(0.05, SQRT2 - 0.01, 15)
    g_min, du_min, ineq_min, rate_min = _outward_checks(outward_b, rel_tol, abs_tol)
    hp_max = _inward_checks(inward_b, rel_tol, abs_tol)
    orbit_checks = {
        "g_min": g_min,
        "U_increment_min": du_min,
        "integrated_inequality_margin_min": ineq_min,
        "rate_inequality_margin_min": rate_min,
        "hprime_max_inward": hp_max,
        "outward_b": [float(v) for v in outward_b],
        "inward_b": [float(v) for v in inward_b],
    }
    violations = []
    if N[i, j] < -CERT_TOL:
        violations.append({"check": "N_grid", "U": float(u[i]), "R": float(r[j]), "value": float(N[i, j])})
    for k, v in boundary.items():
        if v < -CERT_TOL:
            violations.append({"check": f"N_boundary {k}", "value": v})
    if gp_p <= 0:
        violations.append({"check": "gprime_factored", "value": gp_p})
    if gp_d <= 0:
        violations.append({"check": "gprime_derived", "value": gp_d})
    if g_min <= 0:
        violations.append({"check": "g_positive", "value": g_min})
    if du_min <= 0:
        violations.append({"check": "U_increasing", "value": du_min})
    if ineq_min < 0:
        violations.append({"check": "integrated_inequality", "value": ineq_min})
    if hp_max >= 0:
        violations.append({"check": "hprime_negative", "value": hp_max})
    cert = Certificate(grid, float(N[i, j]), (float(u[i]), float(r[j])), boundary, gp_p, gp_d,
                       orbit_checks, not violations, violations)
    if strict and violations:
        raise CertificateFailure("inequality certificate violated", violations=violations)
    return cert
