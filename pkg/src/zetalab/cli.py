"""Command-line front end.

Reports are newline-delimited JSON records on stdout (or --out); curves,
zero lists and moment samples can be written as CSV.  Every record embeds
the resolved configuration and the package version, and contains no
timestamps, so identical invocations produce byte-identical output.

Exit codes: 0 success, 2 domain/validation error, 3 budget or precision
error, 4 geometry error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, ladder, quad, specfun, zeros
from .errors import (BudgetError, DomainError, GeometryError, PrecisionError,
                     ZetalabError)

SECTION4_HEIGHT_CEILING = 5e4  # refuse the distant-pair pipeline above this


def _emit(records, args):
    out = sys.stdout if args.out == "-" else open(args.out, "w")
    try:
        for rec in records:
            rec = dict(rec)
            rec["version"] = __version__
            rec["config"] = args.config_echo
            out.write(json.dumps(rec) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _parse_floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise DomainError(f"cannot parse float list {text!r}") from exc


def _snap_zero(gamma, spread=5.0):
    """Nearest actual zero to a requested height."""
    zs = zeros.find_zeros(max(gamma - spread, 2.0), gamma + spread)
    if len(zs) == 0:
        raise DomainError(f"no zero within {spread} of t={gamma}")
    return float(zs[np.argmin(np.abs(zs - gamma))]), zs


def _next_zero(gamma):
    """First zero strictly above gamma (expanding forward search)."""
    lo = gamma + 1e-9
    width = 10.0
    while width <= 160.0:
        zs = zeros.find_zeros(lo, gamma + width)
        above = zs[zs > gamma + 1e-9]
        if len(above):
            return float(above[0])
        width *= 2.0
    raise DomainError(f"no zero found within {width} above t={gamma}")


def _build_window_curve(t0, length, step, anchor=None, budget=None):
    return ladder.build_ladder(t0, length, step, anchor=anchor or t0,
                               budget=budget)


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

def _cmd_theta(args):
    _emit([{"command": "theta", "t": args.t, "theta": specfun.theta(args.t)}], args)
    return 0


def _cmd_z(args):
    prec = specfun.Precision(target_abs_err=args.target_abs_err,
                             correction_terms=args.correction_terms,
                             allow_hp=not args.no_hp)
    p = specfun.z(args.t, prec)
    _emit([{"command": "z", "t": p.t, "theta": p.theta, "z": p.z,
            "abs_err": p.abs_err}], args)
    return 0


def _cmd_zeros(args):
    zs = zeros.find_zeros(args.t_lo, args.t_hi, grid_step=args.grid_step)
    if args.format == "csv":
        if args.out == "-":
            sys.stdout.write("gamma\n")
            for g in zs:
                sys.stdout.write(f"{float(g)!r}\n")
        else:
            zeros.write_zeros_csv(args.out, zs)
        return 0
    recs = [{"command": "zeros", "gamma": float(g)} for g in zs]
    recs.append({"command": "zeros-summary", "count": len(zs),
                 "main_term": zeros.zero_count_main_term(args.t_hi)
                 - (zeros.zero_count_main_term(args.t_lo) if args.t_lo > 0 else 0.0)})
    _emit(recs, args)
    return 0


def _cmd_moment(args):
    est = quad.integrate_z4(args.T, args.U, args.tol, budget=args.budget)
    rec = {"command": "moment", **est.to_dict()}
    rec["ingham_ratio"] = quad.ingham_ratio(est) if args.U > 0 else 0.0
    _emit([rec], args)
    return 0


def _cmd_laplace(args):
    value, rep = quad.laplace_moment(args.delta, args.tol, budget=args.budget,
                                     full_output=True)
    main = quad.INV_TWO_PI_SQ / args.delta * math.log(1.0 / args.delta) ** 4 \
        if args.delta < 1.0 else 0.0
    rec = {"command": "laplace", "delta": args.delta, **rep.to_dict()}
    rec["main_term_ratio"] = value / main if main > 0 else None
    _emit([rec], args)
    return 0


def _cmd_fit(args):
    if args.samples:
        samples = quad.read_samples_csv(args.samples)
    elif args.generate:
        heights = _parse_floats(args.generate)
        ests = quad.moment_samples(heights, tol=args.tol, budget=args.budget)
        samples = [(e.T + e.U, e.value, e.err_bound) for e in ests]
        if args.samples_out:
            quad.write_samples_csv(args.samples_out, ests)
    else:
        raise DomainError("fit needs --samples FILE or --generate T1,T2,...")
    fit = quad.fit_moment_polynomial(samples)
    c0_ref = quad.INV_TWO_PI_SQ
    rec = {"command": "fit", **fit.to_dict(),
           "c0_reference": c0_ref,
           "c0_rel_dev": abs(fit.coeffs[0] - c0_ref) / c0_ref,
           "n_samples": len(samples)}
    _emit([rec], args)
    return 0


def _cmd_ladder(args):
    conv = ladder.Convention(args.convention)
    curve = ladder.build_ladder(args.T, args.U, args.step, conv,
                                anchor=args.anchor, tol_ladder=args.tol_ladder,
                                budget=args.budget)
    ladder.save_curve(curve, args.curve_out)
    _emit([{"command": "ladder", "t0": curve.t0, "t1": curve.t1,
            "step": curve.step, "convention": curve.convention.value,
            "anchor": curve.anchor, "samples": int(curve.phi.size),
            "phi_end": float(curve.phi[-1]), "err_bound": curve.err_bound,
            "warnings": curve.warnings, "curve_file": args.curve_out}], args)
    return 0


def _cmd_chords(args):
    curve = ladder.load_curve(args.curve)
    scan = ladder.find_almost_parallel_chords(curve, _parse_floats(args.lengths),
                                              args.tol)
    recs = [{"command": "chords-summary", **scan.to_dict()}]
    chords = scan.chords
    if args.max_chords is not None:
        chords = chords[: args.max_chords]
    recs.extend({"command": "chord", **c.to_dict()} for c in chords)
    _emit(recs, args)
    return 0


def _cmd_inflect(args):
    gamma, _ = _snap_zero(args.gamma)
    if args.gamma_next is not None:
        gamma_next = args.gamma_next
    else:
        gamma_next = _next_zero(gamma)
    geom = zeros.ZeroGeometry(gamma=gamma, gamma_next=gamma_next)
    curve = _build_window_curve(gamma, gamma_next - gamma + args.step,
                                args.step, budget=args.budget)
    rho = zeros.find_inflection(geom, curve)
    h = 1e-4
    cc = zeros.curvature(np.array([rho - h, rho + h]), curve)
    _emit([{"command": "inflect", **geom.to_dict(),
            "curvature_left": float(cc[0]), "curvature_right": float(cc[1]),
            "checks": [{"name": "interior", "ok": gamma < rho < gamma_next},
                       {"name": "convex-concave",
                        "ok": bool(cc[0] > 0.0 > cc[1])}]}], args)
    return 0


def _cmd_gamma_bar(args):
    if args.gamma > args.max_height:
        raise DomainError(
            f"gamma={args.gamma} above the pipeline ceiling {args.max_height}; "
            "raise --max-height deliberately if you mean it")
    gamma, _ = _snap_zero(args.gamma)
    u0 = zeros.GAMMA_BAR_EXPONENT + 2.0 * args.eps
    reach = gamma + gamma ** u0
    zs = zeros.find_zeros(max(gamma - 2.0, 2.0), reach + 10.0)
    gbar, dgap = zeros.select_gamma_bar(gamma, args.eps, zs)
    curve = _build_window_curve(gamma, gbar - gamma + args.step, args.step,
                                budget=args.budget)
    ch = ladder.chord(curve, gamma, gbar)
    _emit([{"command": "gamma-bar", "gamma": gamma, "eps": args.eps,
            "gamma_bar": gbar, "delta_gap": dgap, "chord_slope": ch.slope,
            "slope_dev": abs(ch.slope - 1.0),
            "slope_tol_3_over_ln": 3.0 / math.log(gamma)}], args)
    return 0


def _cmd_rotate(args):
    if args.mode == 4 and args.gamma > args.max_height:
        raise DomainError(
            f"gamma={args.gamma} above the pipeline ceiling {args.max_height}")
    gamma, _ = _snap_zero(args.gamma)
    target = args.target_tan
    clamped = False
    if args.mode == 4:
        lo, hi = args.eta, 1.0 - args.eta
        if not (lo <= target <= hi):
            target = min(max(target, lo), hi)
            clamped = True
    geom = zeros.ZeroGeometry(gamma=gamma, gamma_next=_next_zero(gamma))
    if args.mode == 3:
        curve = _build_window_curve(gamma, geom.gamma_next - gamma + args.step,
                                    args.step, budget=args.budget)
        zeros.find_inflection(geom, curve)
        u_max = geom.rho - gamma
    else:
        reach = gamma + gamma ** (zeros.GAMMA_BAR_EXPONENT + 2.0 * args.eps)
        ztab = zeros.find_zeros(max(gamma - 2.0, 2.0), reach + 10.0)
        gbar, dgap = zeros.select_gamma_bar(gamma, args.eps, ztab)
        geom.gamma_bar, geom.delta_gap = gbar, dgap
        curve = _build_window_curve(gamma, gbar - gamma + args.step, args.step,
                                    budget=args.budget)
        geom.rho_bar = zeros.crossing_point(curve, gamma, gbar)
        u_max = geom.rho_bar - gamma
    U = zeros.rotating_chord_solve(curve, gamma, target, u_max)
    lhs = quad.integrate_z4(gamma, U, 1e-6, budget=args.budget).value
    rhs = target * U * math.log(gamma) ** 4 / (2.0 * math.pi ** 2)
    if args.sweep_out:
        # plot-ready slope-vs-window data over the scanned range
        grid = curve.grid
        ms = grid[(grid > gamma + 0.5 * curve.step)
                  & (grid <= gamma + u_max + 1e-12)]
        slopes = (curve.phi_at(ms) - float(curve.phi_at(gamma))) / (ms - gamma)
        with open(args.sweep_out, "w") as fh:
            fh.write("U,slope\n")
            for u, s in zip(ms - gamma, slopes):
                fh.write(f"{float(u)!r},{float(s)!r}\n")
    _emit([{"command": "rotate", "mode": args.mode, **geom.to_dict(),
            "target_tan": target, "clamped": clamped, "U": U, "u_max": u_max,
            "moment_lhs": lhs, "chord_rhs": rhs,
            "rel_discrepancy": abs(lhs - rhs) / max(abs(rhs), 1e-300)}], args)
    return 0


def _cmd_verify(args):
    curve = _build_window_curve(args.T, args.U, args.step, anchor=args.T,
                                budget=args.budget)
    n = args.n if args.n is not None else curve.t0
    m = args.m if args.m is not None else curve.t1
    rep = ladder.verify_theorem(curve, n, m, quad_tol=args.quad_tol,
                                budget=args.budget)
    _emit([{"command": "verify", **rep.to_dict()}], args)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--budget", type=float, default=None,
                   help="integrand evaluation cap (default: ZETALAB_BUDGET or 1e7)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="zetalab",
        description="Fourth-moment integrals of |zeta(1/2+it)| and the chord "
                    "geometry of the cumulative moment curve.")
    ap.add_argument("--version", action="version", version=f"zetalab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theta", help="Riemann-Siegel theta at one height")
    p.add_argument("--t", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_theta)

    p = sub.add_parser("z", help="Z(t) with a requested error bound")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--target-abs-err", type=float, default=1e-5)
    p.add_argument("--correction-terms", type=int, default=2)
    p.add_argument("--no-hp", action="store_true",
                   help="disable the arbitrary-precision fallback")
    _add_common(p)
    p.set_defaults(func=_cmd_z)

    p = sub.add_parser("zeros", help="zeros of Z in a window")
    p.add_argument("--t-lo", type=float, required=True)
    p.add_argument("--t-hi", type=float, required=True)
    p.add_argument("--grid-step", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=_cmd_zeros)

    p = sub.add_parser("moment", help="integral of Z^4 over [T, T+U]")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--U", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=_cmd_moment)

    p = sub.add_parser("laplace", help="damped moment integral Z^4 e^(-delta t)")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=_cmd_laplace)

    p = sub.add_parser("fit", help="moment polynomial fit from samples")
    p.add_argument("--samples", help="CSV of T,value,err_bound")
    p.add_argument("--generate", help="comma-separated heights to sample")
    p.add_argument("--samples-out", help="where to save generated samples")
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("ladder", help="build and export the cumulative curve")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--U", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--convention", choices=[c.value for c in ladder.Convention],
                   default=ladder.Convention.ANCHOR_LOG.value)
    p.add_argument("--anchor", type=float, default=None)
    p.add_argument("--tol-ladder", type=float, default=1e-8)
    p.add_argument("--curve-out", required=True, help="curve CSV path")
    _add_common(p)
    p.set_defaults(func=_cmd_ladder)

    p = sub.add_parser("chords", help="scan a curve for almost-parallel chords")
    p.add_argument("--curve", required=True, help="curve CSV written by 'ladder'")
    p.add_argument("--lengths", required=True, help="comma-separated lengths")
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--max-chords", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_chords)

    p = sub.add_parser("inflect", help="inflection point of one zero gap")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--gamma-next", type=float, default=None)
    p.add_argument("--step", type=float, default=0.001)
    _add_common(p)
    p.set_defaults(func=_cmd_inflect)

    p = sub.add_parser("gamma-bar", help="distant paired zero and its chord")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--max-height", type=float, default=SECTION4_HEIGHT_CEILING)
    _add_common(p)
    p.set_defaults(func=_cmd_gamma_bar)

    p = sub.add_parser("rotate", help="rotating chord: window for a target slope")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--target-tan", type=float, required=True)
    p.add_argument("--mode", type=int, choices=[3, 4], default=3,
                   help="3: window up to the inflection; 4: up to the crossing")
    p.add_argument("--eta", type=float, default=0.05,
                   help="mode-4 clamp of target into [eta, 1-eta]")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--max-height", type=float, default=SECTION4_HEIGHT_CEILING)
    p.add_argument("--sweep-out", default=None,
                   help="write a (U, slope) CSV of the scanned chord sweep")
    _add_common(p)
    p.set_defaults(func=_cmd_rotate)

    p = sub.add_parser("verify", help="interval moment against the chord form")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--U", type=float, required=True)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--quad-tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=_cmd_verify)

    return ap


_CSV_COMMANDS = {"zeros"}  # CSV is for zero lists and curve/sample files only


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.budget is not None:
        args.budget = int(args.budget)
    if args.format == "csv" and args.command not in _CSV_COMMANDS:
        print(f"error: --format csv is not defined for '{args.command}' "
              "(curves and samples have their own file flags)", file=sys.stderr)
        return 2
    # resolved config echoed into every record (deterministic key order)
    skip = {"func", "config_echo"}
    args.config_echo = {k: v for k, v in sorted(vars(args).items())
                        if k not in skip}
    try:
        return args.func(args)
    except (BudgetError, PrecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ZetalabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
