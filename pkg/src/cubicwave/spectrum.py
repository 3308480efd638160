"""The discrete family c_n with Phi(c_n) = (n + 1/2) pi, plus a comparison table against the large-n predictions."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import asymptotics, interior, ode
from .errors import BracketFailure, InvalidInput, WrongBranch

SEED_WIDEN = 0.3
SCAN_RATIO = 1.02


@dataclass
class SelfSimilarSolution:
    n: int
    c_n: float
    b_n: float
    E_n: float
    x_max: float
    orbit: interior.COrbitSummary = field(repr=False)
    D: float = 0.0
    Phi: float = 0.0
    zeros: int = 0
    sign_changes: list = field(default_factory=list, repr=False)

    def profile(self, num: int = 2001):
        return self.orbit.profile(num)

    def record(self, c_pred=None, b_pred=None, profile_path=None):
        return {
            "n": self.n,
            "c_n": self.c_n,
            "b_n": self.b_n,
            "E_n": self.E_n,
            "c_pred": c_pred,
            "b_pred": b_pred,
            "x_max": self.x_max,
            "profile_path": profile_path,
        }


def phase_residual(c: float, n: int, rel_tol=ode.DEFAULT_RTOL, abs_tol=ode.DEFAULT_ATOL) -> float:
    return interior.phase_total(c, rel_tol, abs_tol) - (n + 0.5) * math.pi


def _scan(n, lo, hi, ratio, rel_tol, abs_tol):
    cs = [lo]
    while cs[-1] < hi:
        cs.append(cs[-1] * ratio)
    g = [phase_residual(c, n, rel_tol, abs_tol) for c in cs]
    brackets = [(cs[i], cs[i + 1]) for i in range(len(cs) - 1)
                if np.sign(g[i]) != np.sign(g[i + 1])]
    return brackets, list(zip(cs, g))


def bracket_c_n(n: int, rel_tol=ode.DEFAULT_RTOL, abs_tol=ode.DEFAULT_ATOL):
    """Bracket around the predicted c_n; fall back to a geometric scan of [0.1, 2 c_pred].

    Returns ``(bracket, all_brackets, trace)``.
    """
    c_pred, _ = asymptotics.predict(n)
    lo, hi = c_pred * (1 - SEED_WIDEN), c_pred * (1 + SEED_WIDEN)
    glo, ghi = phase_residual(lo, n, rel_tol, abs_tol), phase_residual(hi, n, rel_tol, abs_tol)
    trace = [(lo, glo), (hi, ghi)]
    if glo < 0 < ghi:
        # confirm uniqueness inside the seed bracket with a local scan
        local, _ = _scan(n, lo, hi, 1.05, rel_tol, abs_tol)
        if len(local) == 1:
            return local[0], local, trace
    brackets, trace = _scan(n, 0.1, 2 * c_pred, SCAN_RATIO, rel_tol, abs_tol)
    if not brackets:
        raise BracketFailure(f"no sign change of Phi - (n+1/2)pi for n={n}", trace=trace)
    best = min(brackets, key=lambda br: abs(math.log(br[0] / c_pred)))
    return best, brackets, trace


def find_c_n(n: int, tol: float = 1e-13, rel_tol=ode.DEFAULT_RTOL, abs_tol=ode.DEFAULT_ATOL,
             reg_tol: float = interior.REGULARITY_TOL) -> SelfSimilarSolution:
    """Locate c_n and assemble the solution record (b_n, E_n, dense profile)."""
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise InvalidInput("n must be a non-negative integer")
    (a, b), brackets, _ = bracket_c_n(n, rel_tol, abs_tol)
    c = brentq(phase_residual, a, b, args=(n, rel_tol, abs_tol),
               xtol=1e-300, rtol=max(tol, 1e-15), maxiter=200)
    orbit = interior.evolve_c_orbit(c, rel_tol=rel_tol, abs_tol=abs_tol)
    zeros = interior.count_zeros(orbit)
    E = interior.static_energy(orbit, reg_tol=reg_tol * max(1.0, c)).E
    sol = SelfSimilarSolution(n, c, orbit.B, E, orbit.x_max, orbit, orbit.D, orbit.Phi,
                              zeros, brackets)
    if zeros != n:
        raise WrongBranch(f"converged profile has {zeros} zeros, expected {n}",
                          c=c, zeros=zeros, brackets=brackets)
    return sol


@dataclass
class TableRow:
    solution: SelfSimilarSolution
    c_pred: float
    b_pred: float

    @property
    def c_deviation(self) -> float:
        return self.c_pred / self.solution.c_n - 1.0

    @property
    def b_deviation(self) -> float:
        return self.b_pred / self.solution.b_n - 1.0


def table(n_max: int, workers: int = 1, **kw) -> list[TableRow]:
    if n_max < 0:
        raise InvalidInput("n_max must be non-negative")
    asymptotics.compute_constants()

    def row(n):
        sol = find_c_n(n, **kw)
        c_pred, b_pred = asymptotics.predict(n)
        return TableRow(sol, c_pred, b_pred)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(row, range(n_max + 1)))
    return [row(n) for n in range(n_max + 1)]


def table_json(rows) -> str:
    return json.dumps([r.solution.record(r.c_pred, r.b_pred) for r in rows], indent=2)
