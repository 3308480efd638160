"""Adaptive explicit integration (DOP853) with dense output, events and blowup detection.

Two entry points share one stepping kernel:

* :func:`integrate` takes an arbitrary Python right-hand side.
* :func:`integrate_system` runs one of the built-in systems, which the compiled
  kernel evaluates without touching the interpreter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _spi

from . import _backend
from .errors import IntegrationFailure, InvalidInput, QuadratureFailure

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
BLOWUP_NORM = 1e8
EVENT_XTOL = 1e-12
MAX_STEPS = 2_000_000


@dataclass(frozen=True)
class IntegrationProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    start: float
    end: float
    initial_state: Sequence[float]

    @property
    def dimension(self) -> int:
        return len(self.initial_state)


@dataclass(frozen=True)
class EventSpec:
    """A terminal event.

    ``kind`` is ``"sign_change"`` (zero of ``functional``), ``"norm_threshold"``
    (max-norm of the state reaching ``threshold``) or ``"step_underflow"``
    (report a step-size collapse as this event instead of as blowup).
    """

    functional: Callable[[float, np.ndarray], float] | None = None
    direction: str = "any"
    kind: str = "sign_change"
    threshold: float = math.inf

    def __post_init__(self):
        if self.direction not in ("any", "up", "down"):
            raise InvalidInput(f"bad event direction {self.direction!r}")
        if self.kind not in ("sign_change", "norm_threshold", "step_underflow"):
            raise InvalidInput(f"bad event kind {self.kind!r}")
        if self.kind == "sign_change" and self.functional is None:
            raise InvalidInput("sign_change event needs a functional")

    def value(self, x, y):
        if self.kind == "norm_threshold":
            return float(np.max(np.abs(y))) - self.threshold
        return float(self.functional(x, y))


@dataclass(frozen=True)
class Termination:
    kind: str  # "reached_end" | "event" | "blowup"
    location: float
    index: int | None = None


@dataclass
class Trajectory:
    """Accepted nodes plus the per-step continuous extension."""

    xs: np.ndarray
    ys: np.ndarray
    coeffs: np.ndarray
    termination: Termination
    nfev: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def x_end(self) -> float:
        return self.termination.location

    @property
    def y_end(self) -> np.ndarray:
        if self.termination.kind == "event":
            return self(self.termination.location)
        return self.ys[-1]

    @property
    def has_dense(self) -> bool:
        return len(self.coeffs) == len(self.xs) - 1 and len(self.xs) > 1

    def _locate(self, x):
        xs = self.xs
        if xs[-1] >= xs[0]:
            idx = np.searchsorted(xs, x, side="right") - 1
        else:
            idx = len(xs) - 1 - np.searchsorted(xs[::-1], x, side="left")
        return np.clip(idx, 0, len(xs) - 2)

    def __call__(self, x):
        """Dense state at ``x`` (scalar -> ``(n,)``, array -> ``(m, n)``)."""
        if not self.has_dense:
            raise InvalidInput("trajectory was integrated without dense output")
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        xa = np.atleast_1d(xa)
        idx = self._locate(xa)
        x0 = self.xs[idx]
        h = self.xs[idx + 1] - x0
        u = ((xa - x0) / h)[:, None]
        F = self.coeffs[idx]
        out = np.zeros((len(xa), self.ys.shape[1]))
        for k in range(F.shape[1] - 1, -1, -1):
            out += F[:, k, :]
            out *= u if (F.shape[1] - 1 - k) % 2 == 0 else (1.0 - u)
        out += self.ys[idx]
        return out[0] if scalar else out

    def truncated(self, step: int, termination: Termination) -> "Trajectory":
        """Keep accepted steps ``0..step`` (inclusive)."""
        return Trajectory(
            self.xs[: step + 2].copy(),
            self.ys[: step + 2].copy(),
            self.coeffs[: step + 1].copy(),
            termination,
            self.nfev,
            dict(self.meta),
        )


def _run(system, fun, params, start, end, y0, rel_tol, abs_tol, dense, first_step, max_norm):
    if not (rel_tol > 0 and abs_tol > 0):
        raise InvalidInput("tolerances must be positive")
    if start == end:
        raise InvalidInput("zero-length integration domain")
    y0 = np.asarray(y0, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise InvalidInput("non-finite initial state")
    status, xs, ys, F, nfev = _backend.kernels.solve(
        system, fun, params, float(start), y0, float(end), rel_tol, abs_tol,
        float(first_step or 0.0), max_norm, dense, MAX_STEPS,
    )
    k = _backend.kernels
    if status == k.NONFINITE:
        raise IntegrationFailure(
            "non-finite right-hand side", last_x=float(xs[-1]), last_state=ys[-1].copy()
        )
    if status == k.MAX_STEPS:
        raise IntegrationFailure(
            "step budget exhausted", last_x=float(xs[-1]), last_state=ys[-1].copy()
        )
    if status == k.END:
        term = Termination("reached_end", float(xs[-1]))
    else:
        reason = "norm" if status == k.BLOWUP_NORM else "step_underflow"
        term = Termination("blowup", float(xs[-1]))
        return Trajectory(xs, ys, F, term, nfev, {"blowup_reason": reason})
    return Trajectory(xs, ys, F, term, nfev)


def _bisect_event(traj, ev, i, g_lo):
    a, b = traj.xs[i], traj.xs[i + 1]
    ga = g_lo
    tol = EVENT_XTOL * max(1.0, abs(a), abs(b))
    while abs(b - a) > tol:
        m = 0.5 * (a + b)
        gm = ev.value(m, traj(m))
        if gm == 0.0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def _crossed(g0, g1, direction):
    if direction == "up":
        return g0 < 0 <= g1
    if direction == "down":
        return g0 > 0 >= g1
    return (g0 < 0 <= g1) or (g0 > 0 >= g1)


def _apply_events(traj: Trajectory, events: Sequence[EventSpec]) -> Trajectory:
    crossing = [e for e in events if e.kind != "step_underflow"]
    if traj.termination.kind == "blowup" and traj.meta.get("blowup_reason") == "step_underflow":
        for j, e in enumerate(events):
            if e.kind == "step_underflow":
                traj.termination = Termination("event", traj.termination.location, j)
                break
    if not crossing or len(traj.xs) < 2:
        return traj
    best = None
    for j, ev in enumerate(events):
        if ev.kind == "step_underflow":
            continue
        g = np.array([ev.value(x, y) for x, y in zip(traj.xs, traj.ys)])
        for i in range(len(g) - 1):
            if _crossed(g[i], g[i + 1], ev.direction):
                loc = _bisect_event(traj, ev, i, g[i]) if g[i + 1] != 0 else traj.xs[i + 1]
                key = (traj.xs[0] - loc) * (1 if traj.xs[-1] < traj.xs[0] else -1)
                if best is None or key < best[0]:
                    best = (key, i, loc, j)
                break
    if best is None:
        return traj
    _, i, loc, j = best
    return traj.truncated(i, Termination("event", float(loc), j))


def integrate(
    problem: IntegrationProblem,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    events: Sequence[EventSpec] = (),
    *,
    dense: bool = True,
    first_step: float | None = None,
    max_norm: float = BLOWUP_NORM,
) -> Trajectory:
    """Integrate ``problem`` until its end, the first event, or blowup."""
    if len(problem.initial_state) < 1:
        raise InvalidInput("empty state")
    traj = _run(
        "python", problem.rhs, (), problem.start, problem.end, problem.initial_state,
        rel_tol, abs_tol, dense or bool(events), first_step, max_norm,
    )
    return _apply_events(traj, events) if events else traj


def integrate_system(
    system: str,
    params: Sequence[float],
    start: float,
    end: float,
    initial_state: Sequence[float],
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    events: Sequence[EventSpec] = (),
    *,
    dense: bool = True,
    first_step: float | None = None,
    max_norm: float = BLOWUP_NORM,
) -> Trajectory:
    """Integrate a built-in system by name (see ``_kernels_py.SYSTEM_IDS``)."""
    traj = _run(
        system, None, tuple(params), start, end, initial_state,
        rel_tol, abs_tol, dense or bool(events), first_step, max_norm,
    )
    return _apply_events(traj, events) if events else traj


def quadrature(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> float:
    """Adaptive Gauss-Kronrod with epsilon-extrapolation (QUADPACK QAGS/QAGI).

    The range is split at ``a + 1`` when ``b`` is infinite so that an
    integrable endpoint singularity at ``a`` and the infinite tail are
    handled by separate subdivisions.
    """
    if a == b:
        return 0.0
    pieces = [(a, b)]
    if math.isinf(b) and not math.isinf(a):
        pieces = [(a, a + 1.0), (a + 1.0, b)]
    total = 0.0
    err = 0.0
    for lo, hi in pieces:
        val, e, info = _spi.quad(
            f, lo, hi, epsabs=tol / 10, epsrel=0.0, limit=500, full_output=True
        )[:3]
        total += val
        err += e
    if not err <= tol:
        raise QuadratureFailure(f"quadrature did not converge (error estimate {err:.3g})")
    return total
