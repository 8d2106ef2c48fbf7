"""Critical-line special functions: theta(t), Z(t) and an independent oracle.

Z(t) is evaluated through the Riemann-Siegel main sum with up to two
saddle-point correction terms.  The independent oracle evaluates
zeta(1/2 + it) by Euler-Maclaurin summation with a computable remainder
bound and shares no code with the Riemann-Siegel path.  Below
``RS_FLOOR`` the main sum has too few terms for a useful bound, so the
public evaluator delegates to the oracle there.

Requested accuracies tighter than the float64 Riemann-Siegel bound are
served by an arbitrary-precision Riemann-Siegel evaluation (mpmath), the
"high precision mode" of this package.  All float64 error bounds carry a
phase-roundoff envelope calibrated against 30-digit references (see
tests); the envelope scales like eps * t because the summand phases grow
linearly with t.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from . import _kernels
from .errors import DomainError, PrecisionError

TWO_PI = 2.0 * math.pi
LN_PI = math.log(math.pi)

# below this height the Riemann-Siegel path is not used at all
RS_FLOOR = 400.0
# theta switches from complex log-gamma to the asymptotic series here
THETA_SWITCH = 30.0

# max |Z_rs - Z| / a^-(2k+1)/2 measured against the oracle on [200, 1e5]
# was 0.92 (k=0), 0.030 (k=1), 0.0052 (k=2); stored with a safety factor.
_RS_TRUNC_COEF = (2.8, 0.127, 0.016)


def _phase_roundoff(t):
    # float64 noise from phases ~ t*ln(n); calibrated envelope, safety > 2
    return 8e-15 * abs(t) + 3e-13


@dataclass(frozen=True)
class Precision:
    """Accuracy request for Z / zeta evaluations.

    correction_terms counts the Riemann-Siegel correction functions used
    (0 = bare main sum, 1 = C0, 2 = C0 and C1).  oracle_terms, when given,
    fixes the Euler-Maclaurin cutoff; None picks max(50, 2t) and grows it
    as needed.  allow_hp gates the arbitrary-precision fallback.
    """

    target_abs_err: float = 1e-5
    correction_terms: int = 2
    oracle_terms: int | None = None
    allow_hp: bool = True

    def __post_init__(self):
        if not (0.0 < self.target_abs_err < 1.0):
            raise DomainError("target_abs_err must lie in (0, 1)")
        if self.correction_terms < 0 or self.correction_terms > 2:
            raise DomainError("correction_terms must be 0, 1 or 2")
        if self.oracle_terms is not None and self.oracle_terms < 10:
            raise DomainError("oracle_terms must be >= 10")


DEFAULT_PRECISION = Precision()


@dataclass(frozen=True)
class EvalPoint:
    """One evaluated height: t, theta(t), Z(t) and an error bound for Z."""

    t: float
    theta: float
    z: float
    abs_err: float


def _check_height(t):
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"height must be finite and >= 0, got {t!r}")
    return t


def theta_many(t):
    """Riemann-Siegel theta on an array of heights >= 0."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    lo = t < THETA_SWITCH
    if np.any(lo):
        zz = 0.25 + 0.5j * t[lo]
        out[lo] = loggamma(zz).imag - 0.5 * t[lo] * LN_PI
    hi = ~lo
    if np.any(hi):
        th = t[hi]
        x = th / TWO_PI
        out[hi] = (0.5 * th * np.log(x) - 0.5 * th - np.pi / 8.0
                   + 1.0 / (48.0 * th) + 7.0 / (5760.0 * th ** 3)
                   + 31.0 / (80640.0 * th ** 5))
    return out


def theta(t):
    """theta(t) = -t/2 ln(pi) + Im ln Gamma(1/4 + it/2).

    Exact complex log-gamma below t=30, asymptotic series (three
    correction terms, error < 2e-15 at the switchover) above.  Absolute
    accuracy is a few ulp of theta(t), i.e. <= 1e-10 for t up to ~1e5.
    """
    t = _check_height(t)
    return float(theta_many(np.array([t]))[0])


def rs_error_bound(t, correction_terms):
    """A-priori bound on |Z_rs(t) - Z(t)| for t >= RS_FLOOR."""
    a = math.sqrt(t / TWO_PI)
    k = min(max(int(correction_terms), 0), 2)
    return _RS_TRUNC_COEF[k] * a ** -(0.5 + k) + _phase_roundoff(t)


def _em_cutoff(t, prec: Precision, target):
    """Euler-Maclaurin cutoff meeting target, or raise PrecisionError."""
    t = float(t)
    if prec.oracle_terms is not None:
        n = int(prec.oracle_terms)
        b = _em_bound_at(t, n)
        if b > target:
            raise PrecisionError(
                f"oracle_terms={n} gives bound {b:.3e} > target {target:.3e} at t={t}",
                achievable=b)
        return n
    n = max(50, int(math.ceil(2.0 * max(t, 1.0))))
    for _ in range(4):
        b = _em_bound_at(t, n)
        if b <= target:
            return n
        n *= 2
    raise PrecisionError(
        f"cannot reach target {target:.3e} at t={t}; floor is {b:.3e}",
        achievable=b)


def _em_bound_at(t, n):
    _, trunc = _kernels._zeta_em_points(np.array([float(t)]), np.array([n]), 6)
    return float(trunc[0]) + _phase_roundoff(t)


def zeta_oracle(t, prec: Precision = DEFAULT_PRECISION, full_output=False):
    """zeta(1/2 + it) by Euler-Maclaurin summation, independent of Z's path.

    Returns the complex value; with full_output=True returns
    (value, abs_err_bound).  Raises PrecisionError when the remainder
    bound cannot meet prec.target_abs_err.
    """
    t = _check_height(t)
    n = _em_cutoff(t, prec, prec.target_abs_err)
    vals, trunc = _kernels._zeta_em_points(np.array([t]), np.array([n]), 6)
    bound = float(trunc[0]) + _phase_roundoff(t)
    v = complex(vals[0])
    return (v, bound) if full_output else v


def _zeta_em_many(tt):
    """Vectorized oracle values and bounds with automatic cutoffs."""
    tt = np.asarray(tt, dtype=float)
    nterms = np.maximum(50, np.ceil(2.0 * np.maximum(tt, 1.0))).astype(np.int64)
    vals, trunc = _kernels._zeta_em_points(tt, nterms, 6)
    return vals, trunc + _phase_roundoff(tt)


def _z_em_many(tt):
    """Z(t) through the oracle: Re(e^{i theta} zeta(1/2+it))."""
    tt = np.asarray(tt, dtype=float)
    vals, bounds = _zeta_em_many(tt)
    rot = np.exp(1j * theta_many(tt))
    return (rot * vals).real, bounds


def _rs_uniform(t0, h, m, kcorr):
    """Riemann-Siegel Z on t0 + j*h (j < m), split at main-sum boundaries."""
    out = np.empty(m)
    j = 0
    while j < m:
        t_start = t0 + j * h
        nmax = int(math.floor(math.sqrt(t_start / TWO_PI)))
        t_bound = TWO_PI * (nmax + 1) ** 2
        j_end = min(m, j + int(math.ceil((t_bound - t_start) / h - 1e-12)))
        j_end = min(j_end, j + 131072)  # cap recurrence drift at ~1e-11
        if j_end <= j:
            j_end = j + 1
        out[j:j_end] = _kernels._z_rs_uniform(t_start, h, j_end - j, nmax, kcorr)
        j = j_end
    return out


def z_uniform(t0, h, m, correction_terms=2):
    """Z on the uniform grid t0 + j*h, j = 0..m-1 (fast bulk evaluator).

    Heights below RS_FLOOR go through the Euler-Maclaurin path; the rest
    through the Riemann-Siegel recurrence.  Deterministic for fixed input.
    """
    if h <= 0 or m < 1:
        raise DomainError("need h > 0 and m >= 1")
    if t0 < 0:
        raise DomainError("grid must start at t >= 0")
    n_lo = min(m, max(0, int(math.ceil((RS_FLOOR - t0) / h - 1e-12))))
    out = np.empty(m)
    if n_lo > 0:
        tt = t0 + h * np.arange(n_lo)
        out[:n_lo], _ = _z_em_many(tt)
    if n_lo < m:
        out[n_lo:] = _rs_uniform(t0 + n_lo * h, h, m - n_lo, correction_terms)
    return out


def z_many(tt, correction_terms=2):
    """Z at arbitrary points with the same path policy as z_uniform."""
    tt = np.asarray(tt, dtype=float)
    out = np.empty(tt.shape)
    lo = tt < RS_FLOOR
    if np.any(lo):
        out[lo], _ = _z_em_many(tt[lo])
    if np.any(~lo):
        out[~lo] = _kernels._z_rs_points(np.ascontiguousarray(tt[~lo]), correction_terms)
    return out


_HP_LOCK = threading.Lock()  # mpmath's working precision is process-global


def _z_hp(t, target):
    """Arbitrary-precision Riemann-Siegel Z via mpmath."""
    import mpmath as mp

    dps = min(60, max(15, int(math.ceil(-math.log10(target))) + 7))
    with _HP_LOCK, mp.workdps(dps):
        v = float(mp.siegelz(t))
    err = 10.0 ** (-(dps - 4)) * max(1.0, abs(v))
    return v, err


def z(t, prec: Precision = DEFAULT_PRECISION) -> EvalPoint:
    """Z(t) with |error| <= prec.target_abs_err, or PrecisionError.

    Path selection: oracle below RS_FLOOR; float64 Riemann-Siegel when its
    a-priori bound meets the target; otherwise the high-precision mode
    (if allowed).  The imaginary part of e^{i theta} zeta must vanish; on
    the oracle path its magnitude is folded into the reported bound.
    """
    t = _check_height(t)
    th = theta(t)
    target = prec.target_abs_err
    if t < RS_FLOOR:
        n = _em_cutoff(t, prec, target)
        vals, trunc = _kernels._zeta_em_points(np.array([t]), np.array([n]), 6)
        zc = complex(np.exp(1j * th) * vals[0])
        bound = float(trunc[0]) + _phase_roundoff(t) + abs(zc.imag)
        return EvalPoint(t=t, theta=th, z=zc.real, abs_err=bound)
    bound = rs_error_bound(t, prec.correction_terms)
    if bound <= target:
        val = float(_kernels._z_rs_points(np.array([t]), prec.correction_terms)[0])
        return EvalPoint(t=t, theta=th, z=val, abs_err=bound)
    if prec.allow_hp:
        val, err = _z_hp(t, target)
        if err <= target:
            return EvalPoint(t=t, theta=th, z=val, abs_err=err)
        raise PrecisionError(
            f"high-precision mode reached {err:.3e} > target {target:.3e}",
            achievable=err)
    raise PrecisionError(
        f"Riemann-Siegel bound {bound:.3e} exceeds target {target:.3e} "
        f"at t={t} with correction_terms={prec.correction_terms} and "
        "high-precision mode disabled",
        achievable=bound)
