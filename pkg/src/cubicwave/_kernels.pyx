# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DOP853 stepping loop with the built-in right-hand sides inlined.

Same contract as ``_kernels_py.solve``. System 0 calls back into Python.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sinh, cos, sin, fabs, sqrt, pow, isfinite

from . import _tableau as tb

cnp.import_array()

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

DEF NS = 12
DEF NSX = 16
DEF NMAX = 8

cdef double SAFETY = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 1.0 / 8.0 - 0.04 * 0.2
cdef double FAC_MIN = 0.333
cdef double FAC_MAX = 6.0

cdef double _C[NSX]
cdef double _B[NS]
cdef double _E3[NS + 1]
cdef double _E5[NS + 1]
cdef double _A[NSX][NSX]
cdef double _D[4][NSX]


cdef void _load_tableau():
    cdef int i, j
    for i in range(NSX):
        _C[i] = tb.C[i]
        for j in range(NSX):
            _A[i][j] = 0.0
        for j in range(len(tb.A[i])):
            _A[i][j] = tb.A[i][j]
    for i in range(NS):
        _B[i] = tb.B[i]
    for i in range(NS + 1):
        _E3[i] = tb.E3[i]
        _E5[i] = tb.E5[i]
    for i in range(4):
        for j in range(NSX):
            _D[i][j] = tb.D[i][j]


_load_tableau()


cdef inline double _rho_accel(double r, double u, double v) nogil:
    return (-(2.0 / r - 4.0 * r) * v + 2.0 * u - u * u * u) / (1.0 - r * r)


cdef int _builtin(int sid, double x, double* y, double* out, double* p) nogil:
    cdef double b, d, s, s2, f, q, r2, pot, cs, sn, u, v, a, c
    if sid == 1:
        b = y[0]
        d = y[1]
        s = sinh(x)
        s2 = s * s
        f = b + x * d
        q = f * f * f / s2
        r2 = b * b + d * d
        out[0] = x * q
        out[1] = -q
        out[2] = f * q / r2 if r2 > 0.0 else 0.0
    elif sid == 2:
        b = y[0]
        d = y[1]
        s = sinh(x)
        s2 = s * s
        f = b + x * d
        q = f * f * f / s2
        pot = -3.0 * f * f / s2
        cs = cos(y[2])
        sn = sin(y[2])
        out[0] = x * q
        out[1] = -q
        out[2] = p[1] * cs * cs + (p[0] - pot) / p[1] * sn * sn
    elif sid == 3:
        out[0] = y[1]
        out[1] = _rho_accel(x, y[0], y[1])
    elif sid == 4:
        u = y[0]
        v = y[1]
        a = _rho_accel(x, u, v)
        out[0] = v
        out[1] = a
        out[2] = (a * u - v * v) / (u * u + v * v)
    elif sid == 5:
        v = y[0]
        out[0] = y[1]
        out[1] = -v * v * v - p[0] * v / (x * x)
    elif sid == 6:
        c = p[0]
        f = y[0]
        out[0] = y[1]
        if c > 0.0:
            s = c * sinh(x / c)
            out[1] = -f * f * f / (s * s)
        else:
            out[1] = -f * f * f / (x * x)
    else:
        return -1
    return 0


cdef class _Rhs:
    cdef int sid
    cdef int n
    cdef object fun
    cdef double p[4]
    cdef cnp.ndarray buf

    cdef int call(self, double x, double* y, double* out) except -2:
        cdef int i
        cdef double[::1] view
        if self.sid != 0:
            _builtin(self.sid, x, y, out, self.p)
        else:
            for i in range(self.n):
                self.buf[i] = y[i]
            res = np.asarray(self.fun(x, self.buf.copy()), dtype=np.float64)
            view = res
            for i in range(self.n):
                out[i] = view[i]
        for i in range(self.n):
            if not isfinite(out[i]):
                return 1
        return 0


cdef double _rms(double* v, int n) nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n):
        acc += v[i] * v[i]
    return sqrt(acc / n)


def solve(system, fun, params, double x0, y0, double x_end, double rtol, double atol,
          double h0, double max_norm, bint dense, long max_steps):
    """Integrate from ``x0`` to ``x_end``; return ``(status, xs, ys, F, nfev)``."""
    cdef int sid = SYSTEM_IDS[system] if isinstance(system, str) else int(system)
    cdef double[::1] y0v = np.ascontiguousarray(y0, dtype=np.float64)
    cdef int n = y0v.shape[0]
    if n > NMAX:
        raise ValueError("compiled kernel supports at most %d components" % NMAX)
    cdef _Rhs rhs = _Rhs()
    rhs.sid = sid
    rhs.n = n
    rhs.fun = fun
    rhs.buf = np.empty(n)
    pa = np.asarray(params, dtype=np.float64).ravel()
    cdef int i, j, s
    for i in range(min(4, pa.shape[0])):
        rhs.p[i] = pa[i]
    for i in range(pa.shape[0], 4):
        rhs.p[i] = 0.0

    cdef double y[NMAX]
    cdef double yn[NMAX]
    cdef double ytmp[NMAX]
    cdef double f[NMAX]
    cdef double fn[NMAX]
    cdef double sc[NMAX]
    cdef double e5[NMAX]
    cdef double e3[NMAX]
    cdef double K[NSX][NMAX]
    for i in range(n):
        y[i] = y0v[i]

    cdef long cap = 256
    cdef cnp.ndarray xs_a = np.empty(cap)
    cdef cnp.ndarray ys_a = np.empty((cap, n))
    cdef cnp.ndarray F_a = np.empty((cap if dense else 0, 7, n))
    cdef double[::1] xs = xs_a
    cdef double[:, ::1] ys = ys_a
    cdef double[:, :, ::1] Fv = F_a
    cdef long m = 0
    cdef long nfev = 0

    cdef double x = x0
    cdef double direction = 1.0 if x_end > x0 else -1.0
    xs[0] = x
    for i in range(n):
        ys[0, i] = y[i]
    m = 1

    cdef int bad = rhs.call(x, y, f)
    nfev += 1
    if bad:
        return NONFINITE, xs_a[:1].copy(), ys_a[:1].copy(), np.empty((0, 7, n)), nfev

    cdef double h_abs, h, x_new, d0, d1, d2, hh0, hh1, acc, n5, n3, err, fac11, fac, h_new, ymax
    cdef double facold = 1e-4
    cdef int status = END
    cdef long attempts = 0
    cdef bint rejected = False
    cdef bint good

    if h0 > 0:
        h_abs = fabs(h0)
    else:
        for i in range(n):
            sc[i] = atol + fabs(y[i]) * rtol
            e5[i] = y[i] / sc[i]
            e3[i] = f[i] / sc[i]
        d0 = _rms(e5, n)
        d1 = _rms(e3, n)
        if d0 < 1e-5 or d1 < 1e-5:
            hh0 = 1e-6
        else:
            hh0 = 0.01 * d0 / d1
        for i in range(n):
            ytmp[i] = y[i] + hh0 * direction * f[i]
        rhs.call(x + hh0 * direction, ytmp, fn)
        for i in range(n):
            e5[i] = (fn[i] - f[i]) / sc[i]
        d2 = _rms(e5, n) / hh0
        if d1 <= 1e-15 and d2 <= 1e-15:
            hh1 = max(1e-6, hh0 * 1e-3)
        else:
            hh1 = pow(0.01 / max(d1, d2), 1.0 / 8.0)
        h_abs = min(100.0 * hh0, hh1)

    while direction * (x_end - x) > 0:
        attempts += 1
        if attempts > max_steps:
            status = MAX_STEPS
            break
        if h_abs < 1e-14 * max(1.0, fabs(x)):
            status = BLOWUP_STEP
            break
        h = h_abs * direction
        x_new = x + h
        if direction * (x_new - x_end) > 0:
            x_new = x_end
        h = x_new - x
        h_abs = fabs(h)

        for i in range(n):
            K[0][i] = f[i]
        good = True
        for s in range(1, NS):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += _A[s][j] * K[j][i]
                ytmp[i] = y[i] + h * acc
            if rhs.call(x + _C[s] * h, ytmp, K[s]):
                good = False
                break
        nfev += NS - 1
        if good:
            for i in range(n):
                acc = 0.0
                for j in range(NS):
                    acc += _B[j] * K[j][i]
                yn[i] = y[i] + h * acc
                if not isfinite(yn[i]):
                    good = False
            if good:
                if rhs.call(x_new, yn, fn):
                    good = False
                nfev += 1
        if not good:
            h_abs *= 0.1
            rejected = True
            continue
        for i in range(n):
            K[NS][i] = fn[i]

        n5 = 0.0
        n3 = 0.0
        for i in range(n):
            sc[i] = atol + max(fabs(y[i]), fabs(yn[i])) * rtol
            acc = 0.0
            for j in range(NS + 1):
                acc += _E5[j] * K[j][i]
            n5 += (acc / sc[i]) * (acc / sc[i])
            acc = 0.0
            for j in range(NS + 1):
                acc += _E3[j] * K[j][i]
            n3 += (acc / sc[i]) * (acc / sc[i])
        if n5 == 0.0 and n3 == 0.0:
            err = 0.0
        else:
            err = h_abs * n5 / sqrt((n5 + 0.01 * n3) * n)

        fac11 = pow(err, EXPO1) if err > 0.0 else 0.0
        if err <= 1.0:
            fac = fac11 / pow(facold, BETA)
            fac = min(1.0 / FAC_MIN, max(1.0 / FAC_MAX, fac / SAFETY))
            facold = max(err, 1e-4)
            if m >= cap:
                cap *= 2
                xs_a = np.resize(xs_a, cap)
                ys_a = np.resize(ys_a, (cap, n))
                xs = xs_a
                ys = ys_a
                if dense:
                    F_a = np.resize(F_a, (cap, 7, n))
                    Fv = F_a
            if dense:
                for s in range(NS + 1, NSX):
                    for i in range(n):
                        acc = 0.0
                        for j in range(s):
                            acc += _A[s][j] * K[j][i]
                        ytmp[i] = y[i] + h * acc
                    rhs.call(x + _C[s] * h, ytmp, K[s])
                nfev += 3
                for i in range(n):
                    d0 = yn[i] - y[i]
                    Fv[m - 1, 0, i] = d0
                    Fv[m - 1, 1, i] = h * f[i] - d0
                    Fv[m - 1, 2, i] = 2.0 * d0 - h * (fn[i] + f[i])
                    for s in range(4):
                        acc = 0.0
                        for j in range(NSX):
                            acc += _D[s][j] * K[j][i]
                        Fv[m - 1, 3 + s, i] = h * acc
            x = x_new
            ymax = 0.0
            for i in range(n):
                y[i] = yn[i]
                f[i] = fn[i]
                ys[m, i] = y[i]
                if fabs(y[i]) > ymax:
                    ymax = fabs(y[i])
            xs[m] = x
            m += 1
            h_new = h_abs / fac
            if rejected:
                h_new = min(h_new, h_abs)
            rejected = False
            h_abs = h_new
            if ymax > max_norm:
                status = BLOWUP_NORM
                break
        else:
            h_abs = h_abs / min(1.0 / FAC_MIN, fac11 / SAFETY)
            rejected = True

    F_out = F_a[: m - 1].copy() if dense else np.empty((0, 7, n))
    return status, xs_a[:m].copy(), ys_a[:m].copy(), F_out, nfev
