"""Critical-line zeros and the geometry of the moment curve between them.

Between consecutive zeros gamma < gamma' the derivative of the curve is
proportional to Z^4, so the curve is convex just right of gamma (where
|Z| grows from 0) and concave just left of gamma'; the first curvature
sign change in between is the inflection point rho, which coincides with
the first stationary point of Z inside the gap.  The module locates
zeros by sign scan plus bisection, builds these geometric objects, and
solves the rotating-chord problems (given a chord slope from a zero, the
smallest window attaining it).

All first-crossing semantics scan left to right and return the first
bracketed root, matching the minimal-rho / closest-crossing conventions.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from . import quad, specfun
from .errors import (CoverageError, DomainError, GeometryError,
                     MissedZeroError, RangeError)
from .ladder import Convention, LadderCurve, chord

TWO_PI_SQ = 2.0 * math.pi ** 2
GAMMA_BAR_EXPONENT = 13.0 / 14.0


def zero_count_main_term(T):
    """Counting main term theta(T)/pi + 1 for zeros in (0, T]."""
    return specfun.theta(T) / math.pi + 1.0


def _bisect_zeros(lo, hi, flo, refine_tol):
    """Vectorized bisection of Z sign changes down to |hi - lo| <= tol."""
    lo = lo.copy()
    hi = hi.copy()
    neg = flo < 0.0
    steps = int(math.ceil(math.log2(max((hi - lo).max() / refine_tol, 1.0)))) + 1
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        fm = specfun.z_many(mid)
        go_right = (fm < 0.0) == neg
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def find_zeros(t_lo, t_hi, *, grid_step=0.05, refine_tol=1e-10,
               count_slack=2.0, auto_refine=True):
    """All zeros of Z in [t_lo, t_hi], each refined to an interval <= refine_tol.

    The count per scan chunk is cross-checked against the counting main
    term (theta difference over pi); a shortfall triggers grid refinement
    and, if it persists, MissedZeroError.
    """
    t_lo = float(t_lo)
    t_hi = float(t_hi)
    if not (t_hi > t_lo >= 0.0):
        raise DomainError(f"need 0 <= t_lo < t_hi, got [{t_lo!r}, {t_hi!r}]")
    if not (0.0 < grid_step <= 0.05):
        raise DomainError("grid_step must lie in (0, 0.05]")
    out = []
    chunk_len = 500.0
    t = t_lo
    while t < t_hi:
        hi = min(t_hi, t + chunk_len)
        out.extend(_scan_chunk(t, hi, grid_step, refine_tol, count_slack,
                               3 if auto_refine else 0))
        t = hi
    return np.asarray(out)


def _scan_chunk(lo, hi, step, refine_tol, slack, retries):
    m = int(math.ceil((hi - lo) / step)) + 1
    h = (hi - lo) / (m - 1)
    zz = specfun.z_uniform(lo, h, m)
    s = np.sign(zz)
    brackets = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = np.nonzero(s == 0)[0]
    blo = lo + h * brackets
    roots = _bisect_zeros(blo, blo + h, zz[brackets], refine_tol) if brackets.size \
        else np.empty(0)
    roots = np.sort(np.concatenate([roots, lo + h * exact]))
    # counting cross-check; the fluctuation term stays within the slack at
    # desk heights so a deficit means the grid straddled a close pair
    expected = (specfun.theta(hi) - specfun.theta(max(lo, 1e-9))) / math.pi
    if abs(roots.size - expected) > slack:
        if retries > 0:
            return _scan_chunk(lo, hi, step / 2.0, refine_tol, slack, retries - 1)
        raise MissedZeroError(
            f"found {roots.size} zeros in [{lo:g}, {hi:g}] but the counting "
            f"main term gives {expected:.2f} (slack {slack}); grid too coarse")
    return list(roots)


def write_zeros_csv(path, zeros):
    with open(path, "w") as fh:
        fh.write("gamma\n")
        for g in zeros:
            fh.write(f"{float(g)!r}\n")


def read_zeros_csv(path):
    out = []
    with open(path) as fh:
        if fh.readline().strip() != "gamma":
            raise DomainError("unexpected zeros CSV header")
        for line in fh:
            line = line.strip()
            if line:
                out.append(float(line))
    return np.asarray(out)


@dataclass
class ZeroGeometry:
    """A zero pair plus the derived geometric points, filled in lazily.

    gamma/gamma_next bracket one gap; rho is the inflection abscissa and
    tan_beta the slope of the chord from gamma to rho.  gamma_bar is the
    distant paired zero of the second construction, delta_gap its offset
    past gamma + gamma^(13/14+2eps), and rho_bar the first curve/chord
    crossing inside (gamma, gamma_bar).
    """

    gamma: float
    gamma_next: float
    rho: float | None = None
    tan_beta: float | None = None
    gamma_bar: float | None = None
    delta_gap: float | None = None
    rho_bar: float | None = None

    def to_dict(self):
        return {"gamma": self.gamma, "gamma_next": self.gamma_next,
                "rho": self.rho, "tan_beta": self.tan_beta,
                "gamma_bar": self.gamma_bar, "delta_gap": self.delta_gap,
                "rho_bar": self.rho_bar}


def pair_geometry(zeros, index) -> ZeroGeometry:
    """ZeroGeometry for the pair (zeros[index], zeros[index+1])."""
    if index < 0 or index + 1 >= len(zeros):
        raise CoverageError("zero table too short for the requested pair")
    return ZeroGeometry(gamma=float(zeros[index]), gamma_next=float(zeros[index + 1]))


def _z_prime(t):
    """Central-difference Z' with the curvature step policy."""
    t = np.asarray(t, dtype=float)
    h = np.maximum(1e-6, 1e-8 * t)
    return (specfun.z_many(t + h) - specfun.z_many(t - h)) / (2.0 * h)


def curvature(t, curve: LadderCurve):
    """phi'' under the curve's convention: 8 pi^2 Z^3 Z' / ln^4(a) plus the
    -8 pi^2 Z^4/(t ln^5 t) transport term under LocalLog."""
    t = np.asarray(t, dtype=float)
    zz = specfun.z_many(t)
    zp = _z_prime(t)
    if curve.convention is Convention.ANCHOR_LOG:
        return 8.0 * math.pi ** 2 * zz ** 3 * zp / math.log(curve.anchor) ** 4
    lt = np.log(t)
    return (8.0 * math.pi ** 2 * zz ** 3 * zp / lt ** 4
            - 8.0 * math.pi ** 2 * zz ** 4 / (t * lt ** 5))


def find_inflection(geom: ZeroGeometry, curve: LadderCurve, *,
                    scan_step=1e-3, refine_tol=1e-8):
    """Smallest curvature sign change in (gamma, gamma_next); sets geom.rho
    and geom.tan_beta.  Convex-to-concave (+ to -) crossings only."""
    g, gn = geom.gamma, geom.gamma_next
    if g < curve.t0 - 1e-9 or gn > curve.t1 + 1e-9:
        raise CoverageError("curve does not cover the zero pair")
    gap = gn - g
    step = min(scan_step, gap / 64.0)
    tt = np.arange(g + step, gn - step / 2.0, step)
    cc = curvature(tt, curve)
    s = np.sign(cc)
    hits = np.nonzero((s[:-1] > 0) & (s[1:] < 0))[0]
    if hits.size == 0:
        raise GeometryError(
            f"no +/- curvature change inside ({g:g}, {gn:g})",
            samples=list(zip(tt.tolist(), cc.tolist())))
    i = int(hits[0])
    lo, hi = float(tt[i]), float(tt[i + 1])
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if float(curvature(np.array([mid]), curve)[0]) > 0.0:
            lo = mid
        else:
            hi = mid
    rho = 0.5 * (lo + hi)
    z_rho = float(specfun.z_many(np.array([rho]))[0])
    deriv = TWO_PI_SQ * z_rho ** 4 / curve.log4(rho)
    if not deriv > 0.0:
        raise GeometryError(f"phi'({rho:g}) vanished; coincident with a zero?")
    geom.rho = rho
    geom.tan_beta = chord(curve, g, rho).slope
    return rho


def rotating_chord_solve(curve: LadderCurve, gamma, target_tan, u_max, *,
                         slope_tol=1e-9):
    """Smallest U with slope(gamma, gamma+U) = target_tan, U <= u_max.

    The chord slope from a zero starts at 0 (the derivative vanishes with
    Z^4), so every target inside the attained slope range is reached; the
    scan brackets the first crossing on the grid and bisects.
    """
    gamma = float(gamma)
    target = float(target_tan)
    u_max = float(u_max)
    if u_max <= 0:
        raise DomainError("u_max must be positive")
    if gamma < curve.t0 - 1e-9 or gamma + u_max > curve.t1 + 1e-9:
        raise CoverageError("curve does not cover [gamma, gamma + u_max]")
    grid = curve.grid
    ms = grid[(grid > gamma + 0.5 * curve.step) & (grid <= gamma + u_max + 1e-12)]
    if ms.size < 2:
        raise DomainError("u_max shorter than two grid steps")
    slopes = (curve.phi_at(ms) - float(curve.phi_at(gamma))) / (ms - gamma)
    smin, smax = float(slopes.min()), float(slopes.max())
    if not (0.0 < target < smax):
        raise RangeError(
            f"target slope {target:g} outside attained range "
            f"({smin:.6g}, {smax:.6g}) from gamma={gamma:g}",
            attained=(smin, smax))
    g = slopes - target
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if g[0] >= 0.0:
        # above target already at the first grid point; the slope from a zero
        # starts near 0, so the first crossing sits inside the first cell
        lo, hi, glo = gamma, float(ms[0]), -target
    elif idx.size:
        i = int(idx[0])
        lo, hi, glo = float(ms[i]), float(ms[i + 1]), float(g[i])
    else:
        raise RangeError(
            f"target slope {target:g} not attained before u_max",
            attained=(smin, smax))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = curve.slope(gamma, mid) - target
        if abs(gm) <= slope_tol:
            return mid - gamma
        if (glo < 0.0) == (gm < 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    raise GeometryError("rotating-chord bisection stalled")


def select_gamma_bar(gamma, eps, zeros):
    """First zero past gamma + gamma^(13/14+2eps) and the slack delta_gap.

    Warns (does not fail) when delta_gap exceeds gamma^(1/4+eps), the scale
    of the zero-spacing estimate used to justify the construction.
    """
    gamma = float(gamma)
    eps = float(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    zeros = np.asarray(zeros, dtype=float)
    threshold = gamma + gamma ** (GAMMA_BAR_EXPONENT + 2.0 * eps)
    if zeros.size == 0 or zeros[-1] < threshold:
        raise CoverageError(
            f"zero table ends at {zeros[-1] if zeros.size else 'nothing'}, "
            f"short of gamma + gamma^(13/14+2eps) = {threshold:g}")
    idx = int(np.searchsorted(zeros, threshold))
    gamma_bar = float(zeros[idx])
    delta_gap = gamma_bar - threshold
    if delta_gap > gamma ** (0.25 + eps):
        _warnings.warn(
            f"delta_gap {delta_gap:g} exceeds gamma^(1/4+eps) = "
            f"{gamma ** (0.25 + eps):g} at gamma={gamma:g}", stacklevel=2)
    return gamma_bar, delta_gap


def crossing_point(curve: LadderCurve, gamma, gamma_bar, *, refine_tol=1e-8,
                   value_tol=1e-8):
    """First crossing of the curve with its chord over (gamma, gamma_bar).

    Validates the expected sign pattern (curve below the chord just right
    of gamma, above it just left of gamma_bar) and bisects the first
    below-to-above crossing until the bracket is below refine_tol and the
    curve-minus-chord residual is below value_tol.
    """
    gamma = float(gamma)
    gamma_bar = float(gamma_bar)
    if gamma_bar <= gamma:
        raise DomainError("need gamma_bar > gamma")
    if gamma < curve.t0 - 1e-9 or gamma_bar > curve.t1 + 1e-9:
        raise CoverageError("curve does not cover [gamma, gamma_bar]")
    phi_g = float(curve.phi_at(gamma))
    slope = (float(curve.phi_at(gamma_bar)) - phi_g) / (gamma_bar - gamma)
    grid = curve.grid
    inner = grid[(grid > gamma + 0.5 * curve.step)
                 & (grid < gamma_bar - 0.5 * curve.step)]
    if inner.size < 4:
        raise DomainError("window too short for a crossing scan")
    h = curve.phi_at(inner) - (phi_g + slope * (inner - gamma))
    if not (h[0] < 0.0 and h[-1] > 0.0):
        raise GeometryError(
            "curve/chord sign pattern violated (expected below right of gamma, "
            f"above left of gamma_bar; got h={h[0]:.3e} .. {h[-1]:.3e})",
            samples=list(zip(inner[:3].tolist(), h[:3].tolist()))
            + list(zip(inner[-3:].tolist(), h[-3:].tolist())))
    idx = np.nonzero((h[:-1] < 0.0) & (h[1:] >= 0.0))[0]
    if idx.size == 0:
        raise GeometryError("no below-to-above crossing found inside the window")
    i = int(idx[0])
    lo, hi = float(inner[i]), float(inner[i + 1])
    hfun = lambda x: float(curve.phi_at(x)) - (phi_g + slope * (x - gamma))
    rho_bar = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        hm = hfun(mid)
        if abs(hm) <= value_tol and hi - lo <= refine_tol:
            rho_bar = mid
            break
        if hm < 0.0:
            lo = mid
        else:
            hi = mid
    if rho_bar is None:
        raise GeometryError("crossing bisection stalled; residual stuck above "
                            f"{value_tol:g}")
    if not gamma < rho_bar < gamma_bar:
        raise GeometryError(f"crossing {rho_bar:g} escaped the open window")
    return rho_bar


@dataclass(frozen=True)
class CorollaryReport:
    """Interval-moment checks against the parallel-chord asymptotic forms."""

    mode: str
    gamma: float
    window: tuple
    target_slope: float
    records: list
    tol: float

    @property
    def worst(self):
        return max((r["rel_discrepancy"] for r in self.records), default=0.0)

    @property
    def all_within(self):
        return all(not r["flagged"] for r in self.records)

    def to_dict(self):
        return {"mode": self.mode, "gamma": self.gamma,
                "window": list(self.window), "target_slope": self.target_slope,
                "tol": self.tol, "records": self.records}


def _find_parallel_chord(curve, lo, hi, length, target, slope_tol=1e-9):
    """Left endpoint N in [lo, hi-length] with slope(N, N+length) = target."""
    grid = curve.grid
    lefts = grid[(grid >= lo) & (grid + length <= hi + 1e-12)]
    if lefts.size < 2:
        return None
    g = (curve.phi_at(lefts + length) - curve.phi_at(lefts)) / length - target
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if idx.size == 0:
        exact = np.nonzero(g == 0.0)[0]
        if exact.size:
            n = float(lefts[exact[0]])
            return chord(curve, n, n + length)
        return None
    i = int(idx[0])
    a, b, ga = float(lefts[i]), float(lefts[i + 1]), float(g[i])
    for _ in range(200):
        mid = 0.5 * (a + b)
        gm = curve.slope(mid, mid + length) - target
        if abs(gm) <= slope_tol:
            return chord(curve, mid, mid + length)
        if (ga < 0.0) == (gm < 0.0):
            a, ga = mid, gm
        else:
            b = mid
    return None


def verify_corollaries(geom: ZeroGeometry, curve: LadderCurve, mode, *,
                       lengths=None, tol=1e-3, quad_tol=1e-6) -> CorollaryReport:
    """Check interval moments over subchords of (gamma, rho) or (gamma, rho_bar).

    mode "inflection": chords parallel to the gamma-rho chord, compared to
    tan_beta/(2 pi^2) * (M-N) * ln^4(gamma).  mode "crossing": unit-slope
    chords inside (gamma, rho_bar), compared to (M-N) ln^4(gamma)/(2 pi^2).
    Report-only: discrepancies above tol are flagged, never raised.
    """
    if mode == "inflection":
        if geom.rho is None or geom.tan_beta is None:
            raise DomainError("geometry has no inflection data; run find_inflection")
        win = (geom.gamma, geom.rho)
        target = geom.tan_beta
    elif mode == "crossing":
        if geom.rho_bar is None:
            raise DomainError("geometry has no crossing data; run crossing_point")
        win = (geom.gamma, geom.rho_bar)
        target = 1.0
    else:
        raise DomainError(f"unknown mode {mode!r}")
    width = win[1] - win[0]
    if lengths is None:
        lengths = [width * f for f in (0.15, 0.3, 0.45)]
    ln4g = math.log(geom.gamma) ** 4
    records = []
    for L in lengths:
        if not (0.0 < L < width):
            raise DomainError(f"length {L!r} does not fit the window {win}")
        ch = _find_parallel_chord(curve, win[0], win[1], L, target)
        if ch is None:
            records.append({"length": L, "found": False, "rel_discrepancy": 0.0,
                            "flagged": False})
            continue
        est = quad.integrate_z4(ch.n, L, quad_tol)
        rhs = target * L * ln4g / TWO_PI_SQ
        rel = abs(est.value - rhs) / max(abs(rhs), 1e-300)
        records.append({"length": L, "found": True, "N": ch.n, "M": ch.m,
                        "slope": ch.slope, "lhs": est.value, "rhs": rhs,
                        "rel_discrepancy": rel, "flagged": bool(rel > tol)})
    return CorollaryReport(mode=mode, gamma=geom.gamma, window=win,
                           target_slope=target, records=records, tol=tol)
