"""Pure-Python DOP853 stepping loop, used when the compiled kernel is unavailable.

Mirrors the stepping logic of ``_kernels.pyx``. Stage sums go through BLAS
here and explicit loops there, and the embedded error estimate amplifies
that rounding, so accepted step sequences drift apart slightly; solutions
agree to integrator tolerance (see tests/test_backends.py).
"""

import math

import numpy as np

from . import _tableau as tb

SYSTEM_IDS = {
    "python": 0,
    "orbit": 1,
    "prufer": 2,
    "rho": 3,
    "rho_angle": 4,
    "oscillator": 5,
    "limit": 6,
}

END = 0
BLOWUP_NORM = 1
BLOWUP_STEP = 2
NONFINITE = 3
MAX_STEPS = 4

_NS = tb.N_STAGES
_C = np.array(tb.C)
_B = np.array(tb.B)
_E3 = np.array(tb.E3)
_E5 = np.array(tb.E5)
_A = np.zeros((tb.N_STAGES_EXTENDED, tb.N_STAGES_EXTENDED))
for _i, _row in enumerate(tb.A):
    _A[_i, : len(_row)] = _row
_D = np.array(tb.D)

SAFETY = 0.9
BETA = 0.04
EXPO1 = 1.0 / 8.0 - BETA * 0.2
FAC_MIN = 0.333
FAC_MAX = 6.0


def _sinh(x):
    # C sinh semantics: overflow gives inf instead of raising
    return math.sinh(x) if abs(x) < 710.0 else math.copysign(math.inf, x)


def _orbit(x, y, p):
    b, d = y[0], y[1]
    s = _sinh(x)
    s2 = s * s
    f = b + x * d
    q = f * f * f / s2
    r2 = b * b + d * d
    dphi = f * q / r2 if r2 > 0.0 else 0.0
    return np.array([x * q, -q, dphi])


def _prufer(x, y, p):
    b, d, th = y[0], y[1], y[2]
    lam, scale = p[0], p[1]
    s = _sinh(x)
    s2 = s * s
    f = b + x * d
    q = f * f * f / s2
    pot = -3.0 * f * f / s2
    if not math.isfinite(th):
        return np.array([x * q, -q, math.nan])
    cs = math.cos(th)
    sn = math.sin(th)
    return np.array([x * q, -q, scale * cs * cs + (lam - pot) / scale * sn * sn])


def _rho_accel(r, u, v):
    return (-(2.0 / r - 4.0 * r) * v + 2.0 * u - u * u * u) / (1.0 - r * r)


def _rho(r, y, p):
    return np.array([y[1], _rho_accel(r, y[0], y[1])])


def _rho_angle(r, y, p):
    u, v = y[0], y[1]
    a = _rho_accel(r, u, v)
    return np.array([v, a, (a * u - v * v) / (u * u + v * v)])


def _oscillator(t, y, p):
    v = y[0]
    return np.array([y[1], -v * v * v - p[0] * v / (t * t)])


def _limit(z, y, p):
    c = p[0]
    F = y[0]
    if c > 0.0:
        s = c * _sinh(z / c)
        acc = -F * F * F / (s * s)
    else:
        acc = -F * F * F / (z * z)
    return np.array([y[1], acc])


_BUILTIN = {1: _orbit, 2: _prufer, 3: _rho, 4: _rho_angle, 5: _oscillator, 6: _limit}


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / v.size)


def _initial_step(rhs, x0, y0, f0, direction, rtol, atol):
    sc = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / sc)
    d1 = _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = rhs(x0 + h0 * direction, y1)
    d2 = _rms((f1 - f0) / sc) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1)


def solve(system, fun, params, x0, y0, x_end, rtol, atol, h0, max_norm, dense, max_steps):
    """Integrate from ``x0`` to ``x_end``; return ``(status, xs, ys, F, nfev)``.

    ``F`` has shape ``(steps, 7, n)`` and holds the continuous-extension
    coefficients of each accepted step (empty when ``dense`` is false).
    """
    sid = SYSTEM_IDS[system] if isinstance(system, str) else int(system)
    p = np.asarray(params, dtype=float)
    if sid == 0:
        def rhs(x, y):
            return np.asarray(fun(x, y), dtype=float)
    else:
        base = _BUILTIN[sid]

        def rhs(x, y):
            return base(x, y, p)

    y = np.array(y0, dtype=float)
    n = y.size
    x = float(x0)
    direction = 1.0 if x_end > x0 else -1.0
    xs = [x]
    ys = [y.copy()]
    Fs = []
    K = np.empty((tb.N_STAGES_EXTENDED, n))
    nfev = 0

    f = rhs(x, y)
    nfev += 1
    if not np.all(np.isfinite(f)):
        return NONFINITE, np.array(xs), np.array(ys), np.empty((0, 7, n)), nfev
    h_abs = abs(h0) if h0 > 0 else _initial_step(rhs, x, y, f, direction, rtol, atol)
    facold = 1e-4
    status = END
    attempts = 0
    rejected = False

    while direction * (x_end - x) > 0:
        attempts += 1
        if attempts > max_steps:
            status = MAX_STEPS
            break
        min_step = 1e-14 * max(1.0, abs(x))
        if h_abs < min_step:
            status = BLOWUP_STEP
            break
        h = h_abs * direction
        x_new = x + h
        if direction * (x_new - x_end) > 0:
            x_new = x_end
        h = x_new - x
        h_abs = abs(h)

        K[0] = f
        good = True
        for s in range(1, _NS):
            dy = h * np.dot(_A[s, :s], K[:s])
            K[s] = rhs(x + _C[s] * h, y + dy)
            if not np.all(np.isfinite(K[s])):
                good = False
                break
        nfev += _NS - 1
        if good:
            y_new = y + h * np.dot(_B, K[:_NS])
            f_new = rhs(x_new, y_new)
            nfev += 1
            good = bool(np.all(np.isfinite(f_new)) and np.all(np.isfinite(y_new)))
        if not good:
            h_abs *= 0.1
            rejected = True
            continue
        K[_NS] = f_new

        sc = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        e5 = np.dot(_E5, K[: _NS + 1]) / sc
        e3 = np.dot(_E3, K[: _NS + 1]) / sc
        n5 = float(np.dot(e5, e5))
        n3 = float(np.dot(e3, e3))
        if n5 == 0.0 and n3 == 0.0:
            err = 0.0
        else:
            err = h_abs * n5 / math.sqrt((n5 + 0.01 * n3) * n)

        fac11 = err ** EXPO1 if err > 0.0 else 0.0
        if err <= 1.0:
            fac = fac11 / facold ** BETA
            fac = min(1.0 / FAC_MIN, max(1.0 / FAC_MAX, fac / SAFETY))
            facold = max(err, 1e-4)
            if dense:
                for s in range(_NS + 1, tb.N_STAGES_EXTENDED):
                    dy = h * np.dot(_A[s, :s], K[:s])
                    K[s] = rhs(x + _C[s] * h, y + dy)
                nfev += 3
                dlt = y_new - y
                F = np.empty((7, n))
                F[0] = dlt
                F[1] = h * f - dlt
                F[2] = 2.0 * dlt - h * (f_new + f)
                F[3:] = h * np.dot(_D, K)
                Fs.append(F)
            x = x_new
            y = y_new
            f = f_new
            xs.append(x)
            ys.append(y.copy())
            h_new = h_abs / fac
            if rejected:
                h_new = min(h_new, h_abs)
            rejected = False
            h_abs = h_new
            if float(np.max(np.abs(y))) > max_norm:
                status = BLOWUP_NORM
                break
        else:
            h_abs = h_abs / min(1.0 / FAC_MIN, fac11 / SAFETY)
            rejected = True

    F_arr = np.array(Fs) if Fs else np.empty((0, 7, n))
    return status, np.array(xs), np.array(ys), F_arr, nfev
