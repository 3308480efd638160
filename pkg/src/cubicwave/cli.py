"""Command-line front end: one subcommand per computation, JSON or CSV on stdout and in --out."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import appendix, asymptotics, exterior, interior, ode, spectrum, stability
from .errors import CertificateFailure, CubicWaveError
from .output import Metadata, csv_text, dumps, normalize

N_MAX_CAP = 10


@dataclass
class RunConfig:
    command: str
    rel_tol: float
    abs_tol: float
    out: str | None
    fmt: str
    args: dict

    @classmethod
    def from_namespace(cls, ns):
        skip = {"command", "rel_tol", "abs_tol", "out", "format", "func"}
        args = {k: v for k, v in sorted(vars(ns).items()) if k not in skip}
        return cls(ns.command, ns.rel_tol, ns.abs_tol, ns.out, ns.format, args)

    def meta(self, **truncation):
        return Metadata(self.command, self.rel_tol, self.abs_tol, truncation, self.args)


def _positive_float(s):
    v = float(s)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{s!r} is not a positive number")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{s!r} is negative")
    return v


class _Emitter:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)

    def path(self, name):
        return os.path.join(self.cfg.out, name) if self.cfg.out else None

    def emit(self, stem, payload, meta, header=None, rows=None):
        if self.cfg.fmt == "csv" and header is not None:
            text = csv_text(header, rows)
            ext = "csv"
        else:
            text = dumps(payload, meta)
            ext = "json"
        sys.stdout.write(text)
        if self.cfg.out:
            with open(self.path(f"{stem}.{ext}"), "w") as fh:
                fh.write(text)


# subcommands ---------------------------------------------------------------

def cmd_solve(cfg, em, ns):
    sol = spectrum.find_c_n(ns.n, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    c_pred, b_pred = asymptotics.predict(ns.n)
    prof = None
    if cfg.out:
        prof = f"profile_n{ns.n}.csv"
        sol.orbit.write_csv(em.path(prof))
    rec = sol.record(c_pred, b_pred, prof)
    rec["D"] = sol.D
    rec["Phi"] = sol.Phi
    rec["zeros"] = sol.zeros
    hdr = list(rec)
    em.emit(f"solve_n{ns.n}", rec, cfg.meta(x_max=sol.x_max), hdr, [[rec[k] for k in hdr]])


def cmd_table(cfg, em, ns):
    rows = spectrum.table(ns.n_max, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    recs = []
    for r in rows:
        prof = None
        if cfg.out:
            prof = f"profile_n{r.solution.n}.csv"
            r.solution.orbit.write_csv(em.path(prof))
        rec = r.solution.record(r.c_pred, r.b_pred, prof)
        rec["c_deviation"] = r.c_deviation
        rec["b_deviation"] = r.b_deviation
        recs.append(rec)
    hdr = list(recs[0])
    em.emit(f"table_n{ns.n_max}", recs,
            cfg.meta(x_max=[r.solution.x_max for r in rows]), hdr, [[rc[k] for k in hdr] for rc in recs])


def cmd_asymptotics(cfg, em, ns):
    k = asymptotics.compute_constants()
    lit = k.law_literals()
    payload = {
        "T": k.T, "tau": k.tau, "A0": k.A0, "A1": k.A1, "theta0": k.theta0, "theta1": k.theta1,
        "half_tau": lit[0], "minus_theta_sum": lit[1], "A0_T": lit[2], "b2_over_c": k.b2_over_c,
        "routes": k.routes,
    }
    meta = cfg.meta(oscillator_t_end=asymptotics.T_END, fit_from=asymptotics.FIT_FROM)
    hdr = [key for key in payload if key != "routes"]
    em.emit("asymptotics", payload, meta, hdr, [[payload[h] for h in hdr]])


def cmd_predict(cfg, em, ns):
    c, b = asymptotics.predict(ns.n)
    payload = {"n": ns.n, "c_pred": c, "b_pred": b}
    em.emit(f"predict_n{ns.n}", payload, cfg.meta(), list(payload), [list(payload.values())])


def cmd_stability(cfg, em, ns):
    sol = spectrum.find_c_n(ns.n, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    pot = stability.build_potential(sol)
    rep = stability.eigenvalues(pot, solution=sol)
    if cfg.out:
        stability.write_eigenfunctions_csv(em.path(f"eigenfunctions_n{ns.n}.csv"), pot)
    payload = rep.to_dict()
    hdr = ["index", "eigenvalue", "matrix_eigenvalue", "nodes"]
    rows = [[i, a, b, m] for i, (a, b, m) in
            enumerate(zip(rep.eigenvalues, rep.matrix_eigenvalues, rep.node_counts))]
    em.emit(f"stability_n{ns.n}", payload, cfg.meta(x_trunc=pot.truncation), hdr, rows)


def cmd_exterior(cfg, em, ns):
    mon_hdr = ["rho", "U", "dU", "h", "g", "n"]
    if ns.n is not None:
        sol = spectrum.find_c_n(ns.n, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
        est = exterior.exterior_singularity(sol, cfg.rel_tol, cfg.abs_tol)
        rep = exterior.b_orbit(sol.b_n, "out", 1e3, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
        payload = est.to_dict()
        stem = f"exterior_n{ns.n}"
    else:
        rep = exterior.b_orbit(ns.b, ns.direction, ns.rho_limit,
                               rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
        payload = rep.to_dict()
        stem = f"exterior_b{ns.b:g}_{ns.direction}"
    if cfg.out:
        rep.write_csv(em.path(f"{stem}_monitors.csv"))
    m = rep.monitors
    rows = list(zip(*(m[k] for k in mon_hdr)))
    em.emit(stem, payload, cfg.meta(blowup_threshold=exterior.BLOWUP, cone_delta=exterior.CONE_DELTA),
            mon_hdr, rows)


def cmd_certify(cfg, em, ns):
    cert = exterior.certify_inequalities(ns.grid, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, strict=False)
    payload = cert.to_dict()
    hdr = ["grid", "N_min", "gprime_factored_min", "gprime_derived_min", "passed"]
    em.emit(f"certify_g{ns.grid}", payload, cfg.meta(), hdr, [[payload[h] for h in hdr]])
    if not cert.passed:
        raise CertificateFailure("inequality certificate violated",
                                 violations=cert.violations)


def cmd_appendix(cfg, em, ns):
    branch = "odd" if ns.odd else "even"
    res = appendix.find_intersection(ns.k, branch)
    stem = f"appendix_k{ns.k}_{branch}"
    if cfg.out:
        appendix.write_curve_csv(em.path(f"{stem}_center_curve.csv"), res.center_curve)
        appendix.write_curve_csv(em.path(f"{stem}_cone_curve.csv"), res.cone_curve)
    payload = res.to_dict()
    hdr = ["k", "branch", "n", "c", "b", "match_residual", "glued_residual", "nodal_count"]
    em.emit(stem, payload, cfg.meta(rho0=appendix.RHO0), hdr, [[payload[h] for h in hdr]])


def cmd_figure1(cfg, em, ns):
    cs = np.geomspace(ns.c_min, ns.c_max, ns.points)
    rows = []
    for sign in (1.0, -1.0):
        for c in cs:
            bb, dd, s = interior.figure1_point(sign * c, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
            rows.append([sign * c, s.B, s.D, bb, dd])
    hdr = ["c", "B", "D", "bbar", "dbar"]
    payload = [dict(zip(hdr, r)) for r in rows]
    em.emit("figure1", payload, cfg.meta(), hdr, rows)


# parser --------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rel-tol", type=_positive_float, default=ode.DEFAULT_RTOL)
    common.add_argument("--abs-tol", type=_positive_float, default=ode.DEFAULT_ATOL)
    common.add_argument("--out", default=None, help="directory for output files")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="cubicwave", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="regular solution with n zeros")
    s.add_argument("--n", type=_nonneg_int, required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("table", parents=[common], help="solutions n = 0..n_max with predictions")
    s.add_argument("--n-max", type=_nonneg_int, required=True)
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("asymptotics", parents=[common], help="matched-asymptotics constants")
    s.set_defaults(func=cmd_asymptotics)

    s = sub.add_parser("predict", parents=[common], help="large-n formulas for c_n, b_n")
    s.add_argument("--n", type=_nonneg_int, required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("stability", parents=[common], help="negative spectrum of the linearization")
    s.add_argument("--n", type=_nonneg_int, required=True)
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("exterior", parents=[common], help="continuation past the light cone")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=_nonneg_int)
    g.add_argument("--b", type=float)
    s.add_argument("--direction", choices=("in", "out"), default="out")
    s.add_argument("--rho-limit", type=_positive_float, default=None)
    s.set_defaults(func=cmd_exterior)

    s = sub.add_parser("certify", parents=[common], help="inequality certificates")
    s.add_argument("--grid", type=int, default=1000)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("appendix", parents=[common], help="center/cone curve intersection")
    s.add_argument("--k", type=_nonneg_int, required=True)
    s.add_argument("--odd", action="store_true", help="b < 0 branch (nodal index 2k+1)")
    s.set_defaults(func=cmd_appendix)

    s = sub.add_parser("figure1", parents=[common], help="sigma-normalized (B, D) curve")
    s.add_argument("--c-min", type=_positive_float, default=0.05)
    s.add_argument("--c-max", type=_positive_float, default=400.0)
    s.add_argument("--points", type=int, default=400)
    s.set_defaults(func=cmd_figure1)
    return p


def _validate(p, ns):
    if ns.command == "table" and ns.n_max > N_MAX_CAP:
        p.error(f"--n-max exceeds the hard cap {N_MAX_CAP}")
    if ns.command == "certify" and ns.grid < 100:
        p.error("--grid must be at least 100")
    if ns.command == "exterior" and ns.b is not None and ns.b == 0:
        p.error("--b must be nonzero")
    if ns.command == "exterior" and ns.n is not None and ns.n < 1:
        p.error("--n must be at least 1 for the exterior singularity")
    if ns.command == "figure1" and (ns.points < 2 or ns.c_min >= ns.c_max):
        p.error("figure1 needs --points >= 2 and --c-min < --c-max")


def run(argv=None) -> int:
    p = build_parser()
    ns = p.parse_args(argv)
    _validate(p, ns)
    cfg = RunConfig.from_namespace(ns)
    try:
        em = _Emitter(cfg)
        ns.func(cfg, em, ns)
    except CubicWaveError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "diagnostics": exc.diagnostics}
        sys.stderr.write(json.dumps(normalize(_jsonable(diag)), indent=2) + "\n")
        return 1
    except OSError as exc:
        diag = {"error": "IOError", "message": str(exc)}
        sys.stderr.write(json.dumps(diag, indent=2) + "\n")
        return 1
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, int, float, bool, type(None), np.floating, np.integer, np.bool_)):
        return obj
    return repr(obj)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
