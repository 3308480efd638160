"""Time the compiled and pure-Python stepping kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from cubicwave import _backend

WORKLOADS = {
    # c-orbit for c = 130 out to the first truncation point
    "orbit": ("orbit", (), 1e-3 / 130, [0.0, 130.0, 0.0], 12.0),
    # Pruefer angle near the deep n=2 eigenvalue
    "prufer": ("prufer", (-600.0, 25.0), 1e-4, [1e-9, 30.0, 1e-3], 20.0),
    # b-orbit past the cone until blowup
    "rho": ("rho", (), 1.0001, [4.0, 6.0], 100.0),
}


def _time(mod, case, repeat):
    system, p, x0, y0, x1 = case
    y0 = np.array(y0, dtype=float)
    if system == "orbit":
        # start on the origin series so the state is consistent
        from cubicwave import interior
        st = interior.series_start(130.0, x0)
        y0 = np.array([st.b, st.d, st.phi])
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        status, xs, ys, F, nfev = mod.solve(system, None, p, x0, y0, x1, 1e-10, 1e-12, 0.0, 1e8, True, 10**6)
        best = min(best, time.perf_counter() - t)
    return best, len(xs), nfev


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        compiled = _backend.get("cython")
    except ImportError:
        raise SystemExit("compiled kernel not built; run pip install -e . first")
    fallback = _backend.get("python")
    print(f"{'workload':10s} {'steps':>7s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, case in WORKLOADS.items():
        tp, steps, _ = _time(fallback, case, args.repeat)
        tc, _, _ = _time(compiled, case, args.repeat)
        print(f"{name:10s} {steps:7d} {tp:11.4f} {tc:11.5f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
