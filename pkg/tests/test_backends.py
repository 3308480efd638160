import math
import os
import subprocess
import sys

import numpy as np
import pytest

from cubicwave import _backend

try:
    _backend.get("cython")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")

# (system, params, x0, y0, x_end)
CASES = [
    ("orbit", (), 1e-4, [1e-12, 2.0, 0.0], 15.0),
    ("prufer", (-3.0, 2.0), 1e-3, [1e-9, 1.4, 1e-3], 10.0),
    ("rho", (), 1e-2, [1.5, 0.01], 0.99),
    ("rho_angle", (), 1.0 + 1e-4, [3.0, 10.5, 1.2], 1.3),
    ("oscillator", (0.2,), 0.1, [0.3, 1.0], 20.0),
    ("limit", (50.0,), 1e-3, [1e-3, 1.0], 30.0),
    ("limit", (0.0,), 1e-3, [1e-3, 1.0], 30.0),
]


def _run(mod, case):
    system, p, x0, y0, x1 = case
    return mod.solve(system, None, p, x0, np.array(y0), x1, 1e-10, 1e-12, 0.0, 1e8, True, 10**6)


@needs_compiled
@pytest.mark.parametrize("case", CASES, ids=[f"{c[0]}-{i}" for i, c in enumerate(CASES)])
def test_kernels_agree(case):
    a = _run(_backend.get("python"), case)
    b = _run(_backend.get("cython"), case)
    # same outcome and end point; states agree to integrator tolerance
    assert a[0] == b[0]
    assert a[1][-1] == b[1][-1]
    assert abs(len(a[1]) - len(b[1])) <= max(2, len(a[1]) // 50)
    np.testing.assert_allclose(a[2][-1], b[2][-1], rtol=1e-7, atol=1e-9)


@needs_compiled
def test_python_callback_system():
    fun = lambda x, y: np.array([y[1], -y[0]])
    out = [mod.solve("python", fun, (), 0.0, np.array([0.0, 1.0]), math.pi, 1e-11, 1e-13, 0.0, 1e8, True, 10**6)
           for mod in (_backend.get("python"), _backend.get("cython"))]
    for status, xs, ys, F, nfev in out:
        assert abs(ys[-1][0]) < 1e-9
    np.testing.assert_allclose(out[0][2][-1], out[1][2][-1], rtol=1e-9, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_forced_fallback_in_subprocess():
    env = dict(os.environ, CUBICWAVE_BACKEND="python")
    code = ("from cubicwave import _backend, spectrum; print(_backend.NAME);"
            "print(repr(spectrum.find_c_n(1).c_n))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, c1 = out.stdout.split()
    assert name == "python"
    assert float(c1) == pytest.approx(9.616283146, rel=1e-8)
