"""Topological shooting in the polar chart of (U, U') at rho0 = sqrt(2/3).

Orbits regular at the center (U(0) = c) and at the cone (U(1) = b) are
integrated to rho0 together with their polar angle, obtained from
theta' = (U'' U - U'^2) / (U^2 + U'^2) so no branch bookkeeping is needed.
A crossing of the two parameter curves in the (angle, radius) plane is a
solution on [0, 1]; it is refined as a 2-d root problem in (c, b).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, root

from . import exterior, ode
from .errors import InvalidInput, LemmaViolation, ScanFailure

RHO0 = math.sqrt(2.0 / 3.0)
ANGLE_STEP = 0.1
RTOL = 1e-12
ATOL = 1e-13
CONE_DELTA = 1e-4


@dataclass(frozen=True)
class PolarPoint:
    angle: float
    radius: float
    parameter: float
    U: float = 0.0
    dU: float = 0.0


def _center_start(c):
    delta = min(0.05, 1e-3 / max(1.0, abs(c)))
    return exterior.rho_series_center(c, delta)


def center_orbit(c: float, rho_end: float = RHO0, rel_tol=RTOL, abs_tol=ATOL, dense=False):
    if not c > 0:
        raise InvalidInput("center_map needs c > 0")
    st = _center_start(c)
    th0 = math.atan(st.dU / st.U)
    return ode.integrate_system("rho_angle", (), st.rho, rho_end, [st.U, st.dU, th0],
                                rel_tol, abs_tol, dense=dense)


def center_map(c: float, rel_tol=RTOL, abs_tol=ATOL) -> PolarPoint:
    """(theta, r) at rho0 for the orbit with U(0) = c, theta(0) = 0."""
    tr = center_orbit(c, RHO0, rel_tol, abs_tol)
    U, dU, th = tr.ys[-1]
    return PolarPoint(float(th), math.hypot(U, dU), c, float(U), float(dU))


def cone_start_angle(U, dU, b):
    """beta at the start: in (-pi/2, pi/2) for b > 0 and (pi/2, 3pi/2) for b < 0."""
    a = math.atan(dU / U)
    return a if b > 0 else a + math.pi


def cone_orbit(b: float, rho_end: float = RHO0, rel_tol=RTOL, abs_tol=ATOL, dense=False,
               delta=CONE_DELTA):
    if b == 0:
        raise InvalidInput("cone_map needs b != 0")
    st = exterior.rho_series_cone(b, delta, "inner")
    y0 = [st.U, st.dU, cone_start_angle(st.U, st.dU, b)]
    return ode.integrate_system("rho_angle", (), st.rho, rho_end, y0, rel_tol, abs_tol, dense=dense)


def branch_offset(k: int, b: float) -> float:
    """Angle offset of the k-th cone map: 2k pi for b > 0, 2(k+1) pi for b < 0."""
    return 2.0 * math.pi * (k if b > 0 else k + 1)


def cone_map(b: float, k: int = 0, rel_tol=RTOL, abs_tol=ATOL) -> PolarPoint:
    """(beta(rho0) - offset, R) for the orbit with U(1) = b."""
    tr = cone_orbit(b, RHO0, rel_tol, abs_tol)
    U, dU, be = tr.ys[-1]
    return PolarPoint(float(be - branch_offset(k, b)), math.hypot(U, dU), b, float(U), float(dU))


# curve tracing -------------------------------------------------------------

def trace_curve(fmap, lo, hi, stop=None, n0=48, max_points=20000):
    """Sample ``fmap`` on [lo, hi] (geometric in |p|) until consecutive angles differ by < 0.1.

    ``stop(point)`` may end the scan early once the curve has left the window of interest.
    """
    sgn = 1.0 if hi > 0 else -1.0
    ps = list(sgn * np.geomspace(abs(lo), abs(hi), n0))
    pts = []
    for p in ps:
        pts.append(fmap(p))
        if stop is not None and stop(pts[-1]):
            break
    i = 0
    while i < len(pts) - 1:
        a, b = pts[i], pts[i + 1]
        big_r = abs(a.radius - b.radius) > 0.25 * max(a.radius, b.radius, 1e-3)
        if abs(a.angle - b.angle) >= ANGLE_STEP or big_r:
            if len(pts) >= max_points:
                raise ScanFailure("curve tracing exceeded its point budget", points=len(pts))
            pm = sgn * math.sqrt(abs(a.parameter * b.parameter))
            if not (min(a.parameter, b.parameter) < pm < max(a.parameter, b.parameter)):
                i += 1
                continue
            pts.insert(i + 1, fmap(pm))
        else:
            i += 1
    return pts


def _segments_cross(P, Q):
    """All (i, j, s, t) with segment P[i]P[i+1] crossing Q[j]Q[j+1]."""
    p0, p1 = P[:-1, None, :], P[1:, None, :]
    q0, q1 = Q[None, :-1, :], Q[None, 1:, :]
    dp, dq = p1 - p0, q1 - q0
    den = dp[..., 0] * dq[..., 1] - dp[..., 1] * dq[..., 0]
    w = q0 - p0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (w[..., 0] * dq[..., 1] - w[..., 1] * dq[..., 0]) / den
        t = (w[..., 0] * dp[..., 1] - w[..., 1] * dp[..., 0]) / den
    hit = (den != 0) & (s >= 0) & (s <= 1) & (t >= 0) & (t <= 1)
    ii, jj = np.nonzero(hit)
    return [(int(i), int(j), float(s[i, j]), float(t[i, j])) for i, j in zip(ii, jj)]


def write_curve_csv(path, pts):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "angle", "radius"])
        for p in pts:
            w.writerow([f"{p.parameter:.9g}", f"{p.angle:.9g}", f"{p.radius:.9g}"])


# intersection --------------------------------------------------------------

@dataclass
class NodalIntersection:
    k: int
    branch: str
    c: float
    b: float
    n: int
    residual: float
    glued_residual: float = math.nan
    nodal_count: int = -1
    candidates: list = field(default_factory=list)
    center_curve: list = field(default_factory=list, repr=False)
    cone_curve: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "k": self.k,
            "branch": self.branch,
            "n": self.n,
            "c": self.c,
            "b": self.b,
            "match_residual": self.residual,
            "glued_residual": self.glued_residual,
            "nodal_count": self.nodal_count,
            "candidates": self.candidates,
        }


def _match(params, k):
    c, b = params
    if c <= 0 or b == 0:
        return [1e6, 1e6]
    p = center_map(c)
    q = cone_map(b, k)
    return [p.U - q.U, p.dU - q.dU]


def glued_profile(c: float, b: float, num: int = 4001):
    """Samples (rho, U, U') of the glued orbit on (0, 1)."""
    tc = center_orbit(c, RHO0, dense=True)
    tb = cone_orbit(b, RHO0, dense=True)
    r1 = np.linspace(tc.xs[0], RHO0, num // 2)
    r2 = np.linspace(RHO0, tb.xs[0], num // 2)[1:]
    Y = np.vstack([tc(r1), tb(r2)])
    return np.concatenate([r1, r2]), Y[:, 0], Y[:, 1]


def nodal_count(c: float, b: float) -> int:
    _, U, _ = glued_profile(c, b, 20001)
    s = np.sign(U)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


_D2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])


def glued_residual(c: float, b: float, half_width: float = 0.05, h: float = 2e-3,
                   samples: int = 201) -> float:
    """Sup of the similarity-equation residual across rho0, U'' by finite differences.

    Each side is integrated tightly; U on the finite-difference stencil comes
    from whichever side of rho0 the stencil point lies, so a mismatch in
    (U, U') at rho0 shows up directly.
    """
    tc = center_orbit(c, RHO0 + half_width + 4 * h, 1e-13, 1e-14, dense=True)
    tb = cone_orbit(b, RHO0 - half_width - 4 * h, 1e-13, 1e-14, dense=True)

    def glued(r):
        r = np.asarray(r)
        out = np.where(r <= RHO0, tc(np.minimum(r, RHO0 + half_width + 4 * h))[..., 0],
                       tb(np.maximum(r, RHO0 - half_width - 4 * h))[..., 0])
        return out

    rho = np.linspace(RHO0 - half_width, RHO0 + half_width, samples)
    pts = rho[:, None] + h * np.arange(-3, 4)[None, :]
    Ug = glued(pts.ravel()).reshape(pts.shape)
    U = Ug[:, 3]
    Upp = Ug @ _D2 / h**2
    c1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60])
    dU = Ug @ c1 / h
    res = (1 - rho**2) * Upp + (2 / rho - 4 * rho) * dU - 2 * U + U**3
    return float(np.max(np.abs(res)))


def _window(k, branch):
    """Center-angle window that contains the crossings of nodal class n."""
    if branch == "even":
        return -(2 * k + 1) * math.pi - math.pi / 2, math.pi / 2
    return -(2 * k + 2) * math.pi - math.pi / 2, math.pi / 2


def find_intersection(k: int, branch: str = "even", c_max: float = 1e4, b_max: float = 200.0):
    if k < 0:
        raise InvalidInput("k must be non-negative")
    if branch not in ("even", "odd"):
        raise InvalidInput("branch must be 'even' or 'odd'")
    n = 2 * k if branch == "even" else 2 * k + 1
    lo, hi = _window(k, branch)
    bsign = 1.0 if branch == "even" else -1.0

    P = trace_curve(center_map, 0.05, c_max, stop=lambda p: p.angle < lo - math.pi)
    Q = trace_curve(lambda b: cone_map(b, k), bsign * 0.05, bsign * b_max,
                    stop=lambda q: q.angle > hi + math.pi)
    PA = np.array([[p.angle, p.radius] for p in P])
    QA = np.array([[q.angle, q.radius] for q in Q])
    hits = _segments_cross(PA, QA)
    if not hits:
        raise ScanFailure(f"no crossing of the center and cone curves for k={k} ({branch})",
                          center_curve=[(p.parameter, p.angle, p.radius) for p in P],
                          cone_curve=[(q.parameter, q.angle, q.radius) for q in Q])
    candidates = []
    best = None
    for i, j, s, t in hits:
        c0 = P[i].parameter + s * (P[i + 1].parameter - P[i].parameter)
        b0 = Q[j].parameter + t * (Q[j + 1].parameter - Q[j].parameter)
        sol = root(_match, [c0, b0], args=(k,), method="hybr", options={"xtol": 1e-13})
        c, b = (float(v) for v in sol.x)
        resid = float(np.hypot(*_match((c, b), k)))
        count = nodal_count(c, b) if sol.success else -1
        candidates.append({"c": c, "b": b, "residual": resid, "nodal_count": count})
        if count == n and (best is None or resid < best[2]):
            best = (c, b, resid, count)
    if best is None:
        raise ScanFailure(f"no crossing in nodal class {n}", candidates=candidates)
    c, b, resid, count = best
    return NodalIntersection(k, branch, c, b, n, resid, glued_residual(c, b), count,
                             candidates, P, Q)


# auxiliary monotonicity and angle monitors --------------------------------

def H_function(rho, U, dU):
    return 0.5 * (1 - rho**2) * dU**2 - U**2 + 0.25 * U**4


@dataclass
class LemmaReport:
    checks: dict
    passed: bool
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {"checks": self.checks, "passed": self.passed, "violations": self.violations}


def _angle_crossing(fmap, target, lo, hi, increasing):
    """Smallest parameter in [lo, hi] where the mapped angle reaches ``target``."""
    ps = np.geomspace(lo, hi, 400)
    prev = None
    for p in ps:
        a = fmap(p).angle
        if prev is not None and ((a >= target) if increasing else (a <= target)):
            return brentq(lambda q: fmap(q).angle - target, prev, p, xtol=1e-12)
        prev = p
    return math.nan


def lemma_monitors(c_range=(0.01, 50.0), b_range=(0.01, 50.0), k: int = 1, samples: int = 40,
                   strict: bool = False) -> LemmaReport:
    if not (0 < c_range[0] < c_range[1] <= 50 and 0 < b_range[0] < b_range[1] <= 50):
        raise InvalidInput("ranges must lie within (0, 50]")
    checks, violations = {}, []
    cs = np.geomspace(c_range[0], c_range[1], samples)
    bs = np.geomspace(b_range[0], b_range[1], samples)

    # continuous dependence: radius -> 0 with the parameter
    small_c = cs[cs < 1.0]
    small_b = bs[bs < 1.0]
    rc = np.array([center_map(c).radius for c in small_c])
    rb = np.array([cone_map(b).radius for b in small_b])
    checks["r_at_smallest_c"] = float(rc[0]) if rc.size else math.nan
    checks["R_at_smallest_b"] = float(rb[0]) if rb.size else math.nan
    checks["r_monotone_small_c"] = bool(np.all(np.diff(rc) > 0))
    checks["R_monotone_small_b"] = bool(np.all(np.diff(rb) > 0))
    if rc.size and not checks["r_monotone_small_c"]:
        violations.append({"check": "radius_monotone", "what": "r(rho0, c) not increasing for small c"})
    if rb.size and not checks["R_monotone_small_b"]:
        violations.append({"check": "radius_monotone", "what": "R(rho0, b) not increasing for small b"})

    # angle bounds along whole orbits
    th_max, be_min = -math.inf, math.inf
    for c in cs:
        tr = center_orbit(c)
        th_max = max(th_max, float(np.max(tr.ys[:, 2])))
    for b in bs:
        tr = cone_orbit(b)
        be_min = min(be_min, float(np.min(tr.ys[:, 2])))
    checks["theta_max"] = th_max
    checks["beta_min"] = be_min
    if th_max >= math.pi / 2:
        violations.append({"check": "angle_bound", "what": "theta reached pi/2", "value": th_max})
    if be_min <= -math.pi / 2:
        violations.append({"check": "angle_bound", "what": "beta reached -pi/2", "value": be_min})

    # parameters in (0, 2): angle at rho0 stays in (-pi/2, pi/2); H-function traces
    h_margin, split_ok, ang_ok = -math.inf, True, True
    for c in cs[cs < 2.0]:
        tr = center_orbit(c, dense=True)
        r = np.linspace(tr.xs[0], RHO0, 400)
        Y = tr(r)
        H = H_function(r, Y[:, 0], Y[:, 1])
        H0 = -c * c + 0.25 * c**4
        h_margin = max(h_margin, float(np.max(H - H0)), H0)
        split_ok &= bool(np.all(np.diff(H) <= 1e-12 * max(1.0, abs(H0))))
        ang_ok &= bool(abs(tr.ys[-1, 2]) < math.pi / 2)
    for b in bs[bs < 2.0]:
        tr = cone_orbit(b, dense=True)
        r = np.linspace(RHO0, tr.xs[0], 400)
        Y = tr(r)
        H = H_function(r, Y[:, 0], Y[:, 1])
        H1 = -b * b + 0.25 * b**4
        h_margin = max(h_margin, float(np.max(H - H1)), H1)
        split_ok &= bool(np.all(np.diff(H) >= -1e-12 * max(1.0, abs(H1))))
        ang_ok &= bool(abs(tr.ys[-1, 2]) < math.pi / 2)
    checks["H_margin"] = h_margin
    checks["H_monotone_split"] = split_ok
    checks["small_parameter_angles_in_band"] = ang_ok
    if h_margin >= 0:
        violations.append({"check": "H_bound", "what": "H exceeded its endpoint value", "value": h_margin})
    if not split_ok:
        violations.append({"check": "H_bound", "what": "H not monotone on the expected side of rho0"})
    if not ang_ok:
        violations.append({"check": "H_bound", "what": "angle at rho0 left (-pi/2, pi/2)"})

    # interval sentence of the existence argument, read with c and with b as the variable
    c_L = _angle_crossing(center_map, -math.pi / 2, 2.0, 1e3, increasing=False)
    c_R = _angle_crossing(center_map, -(2 * k + 1) * math.pi, 2.0, 1e4, increasing=False)
    b_L = _angle_crossing(cone_map, math.pi / 2, 2.0, 200.0, increasing=True)
    b_R = _angle_crossing(cone_map, (2 * k + 1) * math.pi, 2.0, 500.0, increasing=True)
    checks["c_L"], checks["c_R"], checks["b_L"], checks["b_R"] = c_L, c_R, b_L, b_R

    def band(params):
        ths = [center_map(p).angle for p in params]
        return bool(all(-(2 * k + 1) * math.pi < t < -math.pi / 2 for t in ths))

    if all(map(math.isfinite, (c_L, c_R))):
        checks["reading_c_interval"] = band(np.linspace(c_L, c_R, 42)[1:-1])
    if all(map(math.isfinite, (b_L, b_R))):
        checks["reading_b_interval"] = band(np.linspace(b_L, b_R, 42)[1:-1])
        checks["beta_band_on_b_interval"] = bool(all(
            math.pi / 2 < cone_map(p).angle < (2 * k + 1) * math.pi
            for p in np.linspace(b_L, b_R, 42)[1:-1]))
    rep = LemmaReport(checks, not violations, violations)
    if strict and violations:
        raise LemmaViolation("lemma check failed", violations=violations)
    return rep
