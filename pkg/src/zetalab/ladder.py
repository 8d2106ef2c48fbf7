"""Reconstruction of the cumulative rescaled fourth-moment curve and its chords.

The curve phi on a grid over [T, T+U] accumulates

    phi(x) = 2 pi^2 * integral_T^x Z^4(t) / ln^4(a) dt,

where the normalizing log is either frozen at the anchor height
(AnchorLog, the default: a = anchor) or taken locally (LocalLog:
a = t inside the integral).  phi(T) = 0, and the curve is nondecreasing
because the integrand is a fourth power.  Chords of y = phi(x) carry the
geometry: the chord over a full window [T, T+U0] has slope 1 + O(1/ln T),
and interval fourth moments equal slope * (m - n) * ln^4(anchor) / 2 pi^2
exactly under AnchorLog, up to quadrature error.

Each grid cell is integrated with the same embedded composite-Boole pair
as the quadrature module; cells keep their individual error estimates so
sub-curve tolerances remain available.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import quad, specfun
from .errors import (BudgetError, ConventionError, CoverageError, DomainError,
                     NoBracketError)

TWO_PI_SQ = 2.0 * math.pi ** 2
MAX_STEP = 0.05
VALIDITY_EXPONENT = 13.0 / 14.0
DEFAULT_EPS = 0.01


class Convention(enum.Enum):
    ANCHOR_LOG = "anchor-log"   # divide by ln^4(anchor), anchor fixed per curve
    LOCAL_LOG = "local-log"     # divide by ln^4(t) inside the integral


@dataclass(frozen=True)
class Chord:
    """Chord of the curve between abscissae n < m; slope is the difference
    quotient (phi(m) - phi(n)) / (m - n), the tangent of the chord angle."""

    n: float
    m: float
    slope: float

    def to_dict(self):
        return {"n": self.n, "m": self.m, "slope": self.slope}


@dataclass
class LadderCurve:
    t0: float
    t1: float
    step: float
    phi: np.ndarray
    convention: Convention
    anchor: float
    tol: float
    err_bound: float = 0.0
    warnings: list = field(default_factory=list)
    evaluations: int = 0
    cum_est: np.ndarray | None = None  # cumulative cell estimates, in-memory only

    @property
    def grid(self):
        return self.t0 + self.step * np.arange(self.phi.size)

    def phi_at(self, x):
        """Linear interpolation between grid samples; exact on the grid."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.t0 - 1e-12) or np.any(x > self.t1 + 1e-12):
            raise DomainError(f"abscissa outside [{self.t0}, {self.t1}]")
        pos = np.clip((x - self.t0) / self.step, 0.0, self.phi.size - 1.0)
        i = np.minimum(pos.astype(int), self.phi.size - 2)
        frac = pos - i
        return self.phi[i] * (1.0 - frac) + self.phi[i + 1] * frac

    def slope(self, n, m):
        return float((self.phi_at(m) - self.phi_at(n)) / (m - n))

    def log4(self, t):
        a = self.anchor if self.convention is Convention.ANCHOR_LOG else t
        return math.log(a) ** 4


def validity_length(T, eps=DEFAULT_EPS):
    """Window length T^(13/14 + 2 eps) inside which the chord identities hold."""
    return T ** (VALIDITY_EXPONENT + 2.0 * eps)


def build_ladder(T, U, step, convention=Convention.ANCHOR_LOG, *,
                 anchor=None, tol_ladder=1e-8, eps=DEFAULT_EPS,
                 budget=None, integrand=None) -> LadderCurve:
    """Accumulate the curve on the grid T, T+step, ..., T + ceil(U/step)*step.

    The per-cell integrals of 2 pi^2 Z^4 / ln^4(.) use the embedded Boole
    pair; cells whose estimate exceeds their share of tol_ladder (relative
    to the total rise) are subdivided.  A window longer than the validity
    length T^(13/14+2eps) gets a warning attached, not an error.

    integrand(t_array) replaces Z^4 (test hook for synthetic curves).
    """
    T = float(T)
    U = float(U)
    step = float(step)
    if not math.isfinite(T) or T < 10.0:
        raise DomainError(f"curve start must be >= 10, got {T!r}")
    if not (U > 0.0) or not math.isfinite(U):
        raise DomainError(f"window length must be positive, got {U!r}")
    if not (0.0 < step <= MAX_STEP):
        raise DomainError(f"step must lie in (0, {MAX_STEP}], got {step!r}")
    if anchor is None:
        anchor = T
    if anchor <= 1.0:
        raise DomainError("anchor must exceed 1")
    warnings_ = []
    u0 = validity_length(T, eps)
    if U > u0:
        warnings_.append(
            f"window U={U:g} exceeds validity length T^(13/14+{2*eps:g}) = {u0:g}")

    n_cells = int(math.ceil(U / step - 1e-9))
    t1 = T + n_cells * step
    bud = quad._Budget(quad._budget_or_default(budget))
    m = n_cells * quad._SUBS + 1
    bud.charge(m)
    h = step / quad._SUBS

    weight = None
    if convention is Convention.LOCAL_LOG:
        weight = lambda tt: np.log(tt) ** -4.0
    f = quad._eval_z4_uniform(T, h, m, weight, integrand)
    cells, ests = quad._panel_values(f, h)

    # refine cells whose estimate exceeds their share of the tolerance; the
    # share follows the cell's own weight in the total rise (the estimator
    # scales with the cell value, so a uniform share would flag every cell
    # under a big oscillation bump)
    rise = float(np.sum(cells))
    floor = max(abs(rise), 1e-12) / n_cells
    thr = tol_ladder * (np.abs(cells) + 0.1 * floor)
    bad = np.nonzero(ests > thr)[0]
    for i in bad:
        v, e, _ = quad._refine_panel(T + i * step, step, float(thr[i]), bud,
                                     weight, integrand)
        cells[i] = v
        ests[i] = e

    scale = TWO_PI_SQ
    if convention is Convention.ANCHOR_LOG:
        scale = TWO_PI_SQ / math.log(anchor) ** 4
    phi = np.empty(n_cells + 1)
    phi[0] = 0.0
    np.cumsum(cells * scale, out=phi[1:])
    cum_est = np.empty(n_cells + 1)
    cum_est[0] = 0.0
    np.cumsum(ests * scale, out=cum_est[1:])
    return LadderCurve(t0=T, t1=t1, step=step, phi=phi, convention=convention,
                       anchor=float(anchor), tol=tol_ladder,
                       err_bound=float(cum_est[-1]), warnings=warnings_,
                       evaluations=bud.used, cum_est=cum_est)


def chord(curve: LadderCurve, n, m) -> Chord:
    """Chord between abscissae n < m, interpolating between grid samples."""
    n = float(n)
    m = float(m)
    if not (m > n):
        raise DomainError(f"need m > n, got n={n!r}, m={m!r}")
    if n < curve.t0 - 1e-12 or m > curve.t1 + 1e-12:
        raise DomainError(
            f"chord [{n}, {m}] outside curve range [{curve.t0}, {curve.t1}]")
    return Chord(n=n, m=m, slope=curve.slope(n, m))


@dataclass(frozen=True)
class ChordScan:
    """Result of an almost-parallel-chord sweep: the passing chords plus the
    fraction of scanned left endpoints that passed, per requested length."""

    chords: list
    fractions: dict
    tol: float

    def to_dict(self):
        return {"tol": self.tol,
                "fractions": {repr(k): v for k, v in self.fractions.items()},
                "n_chords": len(self.chords)}


def find_almost_parallel_chords(curve: LadderCurve, lengths, tol) -> ChordScan:
    """Scan all grid left endpoints for chords of the given lengths whose
    slope lies within tol of 1 (the almost-parallel property)."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    grid = curve.grid
    chords = []
    fractions = {}
    for L in lengths:
        L = float(L)
        if not (0.0 < L < curve.t1 - curve.t0):
            raise DomainError(f"length {L!r} does not fit in the curve window")
        lefts = grid[grid + L <= curve.t1 + 1e-12]
        slopes = (curve.phi_at(lefts + L) - curve.phi_at(lefts)) / L
        ok = np.abs(slopes - 1.0) <= tol
        fractions[L] = float(np.mean(ok)) if lefts.size else 0.0
        for x, s in zip(lefts[ok], slopes[ok]):
            chords.append(Chord(n=float(x), m=float(x + L), slope=float(s)))
    return ChordScan(chords=chords, fractions=fractions, tol=tol)


def _first_bracket(gs):
    """Index i of the first sign change gs[i], gs[i+1]; -1 when none."""
    s = np.sign(gs)
    hit = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if hit.size:
        return int(hit[0])
    zero = np.nonzero(s == 0)[0]
    if zero.size:
        return -2 - int(zero[0])  # exact zero marker
    return -1


def find_unit_slope_chord(curve: LadderCurve, n, *, slope_tol=1e-9) -> Chord:
    """Smallest m > n with slope(n, m) = 1, bracketed on the grid then bisected.

    The mean-value structure guarantees such chords once the running mean
    of the derivative crosses 1; raises NoBracketError (with the scanned
    slope range) when the curve never crosses unit slope from n.
    """
    n = float(n)
    if not (curve.t0 - 1e-12 <= n < curve.t1):
        raise DomainError(f"start {n!r} outside curve range")
    grid = curve.grid
    ms = grid[grid > n + curve.step * 0.5]
    if ms.size < 2:
        raise DomainError("curve too short to scan from the given start")
    slopes = (curve.phi_at(ms) - float(curve.phi_at(n))) / (ms - n)
    g = slopes - 1.0
    idx = _first_bracket(g)
    if idx == -1:
        raise NoBracketError(
            f"no unit-slope chord from n={n:g}: slopes stay in "
            f"[{slopes.min():.6g}, {slopes.max():.6g}]",
            scanned_range=(float(slopes.min()), float(slopes.max())))
    if idx <= -2:
        m = float(ms[-2 - idx])
        return Chord(n=n, m=m, slope=curve.slope(n, m))
    lo, hi = float(ms[idx]), float(ms[idx + 1])
    glo = float(g[idx])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = curve.slope(n, mid) - 1.0
        if abs(gm) <= slope_tol:
            return Chord(n=n, m=mid, slope=gm + 1.0)
        if (glo < 0.0) == (gm < 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    raise NoBracketError(
        f"bisection stalled refining the unit-slope chord from n={n:g}",
        scanned_range=(float(slopes.min()), float(slopes.max())))


@dataclass(frozen=True)
class TheoremReport:
    """Cross-check of interval moment against slope * (m-n) * ln^4(anchor)/2pi^2."""

    n: float
    m: float
    lhs: float
    rhs: float
    slope: float
    rel_discrepancy: float
    convention: str
    anchor: float
    quad_err_bound: float
    curve_err_bound: float
    drift_bound: float | None = None

    def to_dict(self):
        d = {"n": self.n, "m": self.m, "lhs": self.lhs, "rhs": self.rhs,
             "slope": self.slope, "rel_discrepancy": self.rel_discrepancy,
             "convention": self.convention, "anchor": self.anchor,
             "quad_err_bound": self.quad_err_bound,
             "curve_err_bound": self.curve_err_bound}
        if self.drift_bound is not None:
            d["drift_bound"] = self.drift_bound
        return d


def verify_theorem(curve: LadderCurve, n, m, *, quad_tol=1e-6,
                   allow_drift=False, integrand=None, budget=None) -> TheoremReport:
    """Compare the direct integral of Z^4 over [n, m] against the chord form.

    Under AnchorLog the two sides agree up to quadrature error when n and m
    sit on the curve grid; off-grid endpoints add the linear-interpolation
    error of phi, O(step^2 * phi''), on top.  Under LocalLog the identity
    drifts by up to (ln m / ln anchor)^4 - 1; that is an error unless
    allow_drift is set, in which case the drift bound is quantified in the
    report instead.
    """
    ch = chord(curve, n, m)
    drift = None
    if curve.convention is Convention.LOCAL_LOG:
        if not allow_drift:
            raise ConventionError(
                "verify_theorem needs an AnchorLog curve; pass allow_drift=True "
                "to quantify the LocalLog drift instead")
        drift = (math.log(m) / math.log(curve.anchor)) ** 4 - 1.0
    est = quad.integrate_z4(n, m - n, quad_tol, integrand=integrand, budget=budget)
    rhs = ch.slope * (m - n) * math.log(curve.anchor) ** 4 / TWO_PI_SQ
    denom = max(abs(rhs), 1e-300)
    rel = abs(est.value - rhs) / denom
    curve_err = 0.0
    if curve.cum_est is not None:
        grid = curve.grid
        curve_err = float(np.interp(m, grid, curve.cum_est)
                          - np.interp(n, grid, curve.cum_est))
        curve_err *= math.log(curve.anchor) ** 4 / TWO_PI_SQ
    return TheoremReport(n=float(n), m=float(m), lhs=est.value, rhs=rhs,
                         slope=ch.slope, rel_discrepancy=rel,
                         convention=curve.convention.value, anchor=curve.anchor,
                         quad_err_bound=est.err_bound, curve_err_bound=curve_err,
                         drift_bound=drift)


# ---------------------------------------------------------------------------
# Serialization: CSV of (t, phi) plus a JSON sidecar with the metadata
# ---------------------------------------------------------------------------

def save_curve(curve: LadderCurve, path):
    path = str(path)
    grid = curve.grid
    with open(path, "w") as fh:
        fh.write("t,phi\n")
        for t, p in zip(grid, curve.phi):
            fh.write(f"{float(t)!r},{float(p)!r}\n")
    meta = {"t0": curve.t0, "t1": curve.t1, "step": curve.step,
            "convention": curve.convention.value, "anchor": curve.anchor,
            "tol_ladder": curve.tol, "err_bound": curve.err_bound,
            "warnings": curve.warnings}
    with open(path + ".json", "w") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")


def load_curve(path) -> LadderCurve:
    path = str(path)
    with open(path + ".json") as fh:
        meta = json.load(fh)
    phi = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,phi":
            raise DomainError(f"unexpected curve CSV header: {header!r}")
        for line in fh:
            line = line.strip()
            if line:
                phi.append(float(line.split(",")[1]))
    phi = np.asarray(phi)
    n_expected = int(round((meta["t1"] - meta["t0"]) / meta["step"])) + 1
    if phi.size != n_expected:
        raise CoverageError(
            f"curve file has {phi.size} samples, sidecar implies {n_expected}")
    return LadderCurve(t0=meta["t0"], t1=meta["t1"], step=meta["step"], phi=phi,
                       convention=Convention(meta["convention"]),
                       anchor=meta["anchor"], tol=meta["tol_ladder"],
                       err_bound=meta["err_bound"], warnings=meta["warnings"],
                       cum_est=None)
