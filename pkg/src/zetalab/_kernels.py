"""Compiled evaluation kernels.

Two independent evaluation paths live here:

* the Riemann-Siegel path: truncated main sum of ``floor(sqrt(t/2pi))``
  cosine terms plus the first two saddle-point correction terms, with a
  fast variant for uniform grids that advances every ``n^(-it)`` factor by
  one exact complex rotation per step instead of re-evaluating cosines;

* the Euler-Maclaurin path: direct summation of ``n^(-s)`` up to a
  configurable truncation plus Bernoulli tail corrections.  It shares no
  code with the Riemann-Siegel path and serves as its oracle.

The correction functions are evaluated through Chebyshev expansions of
``psi(p) = cos(pi p^2/2 + 3 pi/8)/cos(pi p)`` and of its scaled third
derivative ``psi'''(p)/(12 pi^2)`` on ``p in [-1, 1]``; the coefficients
below were fitted against 40-digit samples (max residual < 3e-15).

All loops run in a fixed order so repeated calls are bit-identical.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi

# Chebyshev coefficients for psi(p), p = 1 - 2*frac(sqrt(t/2pi)).
_PSI_CHEB = np.array([
    6.42667286239768432e-01, -2.42861286636752993e-17, 2.71972999997854958e-01,
    -1.11022302462515654e-16, 1.07386058193404930e-02, -1.27675647831892992e-16,
    -1.37438152963357293e-03, 2.55351295663786034e-16, -1.24682218803093302e-04,
    2.51187959321441736e-16, -5.76459970624832130e-07, -1.11022302462515703e-16,
    2.72806743134568293e-07, -1.77635683940025130e-16, 8.07795325630245329e-09,
    -6.10622663543836270e-17, -2.08845896132459137e-10, 6.66133814775094146e-17,
    -1.31154365146102275e-11, -3.33066907387547196e-17, -1.40554234917544922e-14,
    5.55111512312578763e-18, 1.03805852802452247e-14, -9.85322934354827120e-17,
    3.24740234702858515e-16, -9.43689570931383528e-17, 2.69229083471600688e-16,
    -1.22124532708767353e-16, 2.52575738102223399e-16, -2.78943534937070847e-16,
    3.94302646089528519e-16, -1.77635683940025180e-16, 2.37657116208822818e-16,
    -2.92821322744885353e-16, 1.94289029309402592e-16, -2.83106871279415243e-16,
    1.27675647831893091e-16, 8.32667268468868453e-18, -1.49880108324396340e-16,
    -2.77555756156289320e-17, 2.77555756156289536e-18, -8.18789480661054723e-17,
    -2.05391259555654315e-16, 3.19189119579733159e-17, -2.77555756156289628e-16,
    9.71445146547013699e-17, -1.58206781009085083e-16, 4.44089209850063565e-17,
    -1.94289029309402844e-17, -8.60422844084498316e-17, 1.11022302462516024e-16,
    -7.77156117237611748e-17, 8.32667268468869532e-18, 3.10862446895044748e-16,
    -5.55111512312579996e-17, 1.22124532708767599e-16, -1.11022302462515938e-17,
    1.69309011255336782e-16, 7.21644966006353871e-17, -3.33066907387547998e-17,
    8.88178419700128486e-17, -1.16573417585641885e-16, 2.30371277609720840e-16,
    -8.32667268468870918e-18, 2.33146835171283820e-16,
])

# Chebyshev coefficients for c1(p) = psi'''(p)/(12 pi^2).
_C1_CHEB = np.array([
    -1.71728862668513677e-18, -1.06979139210029977e-02, 3.42607886505419417e-18,
    -1.71706512433778893e-02, -1.33573707650214149e-17, -2.79321114978847273e-03,
    -9.36750677027476047e-18, 3.63756537192464019e-05, -2.60208521396521151e-19,
    2.71089552311400221e-05, -3.29597460435593448e-18, 1.04837498666691297e-06,
    4.33680868994201918e-20, -5.88646716856433880e-08, 1.63064006741819935e-17,
    -4.32296728060822249e-09, 6.24500451351650801e-18, 1.13695757669729538e-11,
    -1.04083408558608456e-17, 6.69983027390408817e-12, 1.04083408558608499e-18,
    1.00790903401204534e-13, -1.24900090270330237e-17, -5.16288400920217690e-15,
    -2.25514051876985084e-18, -1.65492619608187481e-16,
])


@njit(cache=True)
def _cheb(c, x):
    # Clenshaw recurrence on [-1, 1]
    b1 = 0.0
    b2 = 0.0
    for i in range(len(c) - 1, 0, -1):
        b1, b2 = 2.0 * x * b1 - b2 + c[i], b1
    return x * b1 - b2 + c[0]


@njit(cache=True)
def _theta_asym(t):
    # valid for t >= 30; error < 2e-15 at the low end, shrinking as t^-7
    x = t / TWO_PI
    return (0.5 * t * np.log(x) - 0.5 * t - np.pi / 8.0
            + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t ** 3)
            + 31.0 / (80640.0 * t ** 5))


@njit(cache=True)
def _rs_correction(t, kcorr):
    """(-1)^(N-1) a^(-1/2) (C0(p) + C1(p)/a) for the RS remainder."""
    if kcorr <= 0:
        return 0.0
    a = np.sqrt(t / TWO_PI)
    n = int(np.floor(a))
    u = a - n
    if u < 0.0:
        u = 0.0
    p = 1.0 - 2.0 * u
    if p > 1.0:
        p = 1.0
    elif p < -1.0:
        p = -1.0
    corr = _cheb(_PSI_CHEB, p)
    if kcorr >= 2:
        corr += _cheb(_C1_CHEB, p) / a
    sign = 1.0 if n % 2 == 1 else -1.0
    return sign * corr / np.sqrt(a)


@njit(cache=True)
def _z_rs_points(tt, kcorr):
    """Riemann-Siegel Z at arbitrary points (t >= 200 recommended)."""
    out = np.empty(tt.size)
    for i in range(tt.size):
        t = tt[i]
        th = _theta_asym(t)
        a = np.sqrt(t / TWO_PI)
        nmax = int(np.floor(a))
        acc = 0.0
        for n in range(1, nmax + 1):
            acc += np.cos(th - t * np.log(n)) / np.sqrt(n)
        out[i] = 2.0 * acc + _rs_correction(t, kcorr)
    return out


@njit(cache=True)
def _z_rs_uniform(t0, h, m, nmax, kcorr):
    """Riemann-Siegel Z at t0 + j*h for j < m, constant main-sum length.

    The caller guarantees floor(sqrt((t0 + j*h)/2pi)) == nmax for every node
    (up to the boundary-rounding convention; see specfun._rs_uniform).  Each
    n^(-it) factor advances by one complex rotation per grid step, so the
    cost per node is one fused multiply-add sweep instead of nmax cosines.
    """
    out = np.empty(m)
    zr = np.empty(nmax)
    zi = np.empty(nmax)
    rr = np.empty(nmax)
    ri = np.empty(nmax)
    for n in range(1, nmax + 1):
        lnn = np.log(n)
        w = 1.0 / np.sqrt(n)
        ph0 = -t0 * lnn
        zr[n - 1] = w * np.cos(ph0)
        zi[n - 1] = w * np.sin(ph0)
        ph = -h * lnn
        rr[n - 1] = np.cos(ph)
        ri[n - 1] = np.sin(ph)
    for j in range(m):
        sr = 0.0
        si = 0.0
        for n in range(nmax):
            sr += zr[n]
            si += zi[n]
            tmp = zr[n] * rr[n] - zi[n] * ri[n]
            zi[n] = zr[n] * ri[n] + zi[n] * rr[n]
            zr[n] = tmp
        t = t0 + j * h
        th = _theta_asym(t)
        out[j] = 2.0 * (np.cos(th) * sr - np.sin(th) * si) + _rs_correction(t, kcorr)
    return out


# B_{2k}/(2k)! for k = 1..7
_BERN_FACT = np.array([
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
])


@njit(cache=True)
def _zeta_em_points(tt, nterms, kterms):
    """Euler-Maclaurin zeta(1/2 + it) plus its truncation bound.

    Returns (values, bounds).  nterms[i] is the series cutoff for point i;
    kterms Bernoulli corrections are applied (kterms <= 6).  The bound is
    Backlund's: first omitted term times |s + 2K + 1|/(1/2 + 2K + 1).
    Float64 phase roundoff is accounted for by the caller, not here.
    """
    vals = np.empty(tt.size, dtype=np.complex128)
    bounds = np.empty(tt.size)
    for i in range(tt.size):
        t = tt[i]
        nn = nterms[i]
        s = complex(0.5, t)
        acc = 0.0 + 0.0j
        for n in range(1, nn + 1):
            lnn = np.log(n)
            w = 1.0 / np.sqrt(n)
            acc += complex(w * np.cos(t * lnn), -w * np.sin(t * lnn))
        nc = float(nn)
        n_to_minus_s = np.exp(complex(-0.5 * np.log(nc), -t * np.log(nc)))
        # tail: N^(1-s)/(s-1) - N^(-s)/2, then Bernoulli corrections
        val = acc + nc * n_to_minus_s / (s - 1.0) - 0.5 * n_to_minus_s
        rising = s
        nfac = n_to_minus_s / nc  # N^(-s-1)
        for k in range(1, kterms + 1):
            val += _BERN_FACT[k - 1] * rising * nfac
            rising = rising * (s + (2 * k - 1)) * (s + (2 * k))
            nfac = nfac / (nc * nc)
        # first omitted term magnitude (k = kterms + 1)
        tk1 = abs(_BERN_FACT[kterms] * rising * nfac)
        bounds[i] = tk1 * abs(s + (2 * kterms + 1)) / (0.5 + 2 * kterms + 1)
        vals[i] = val
    return vals, bounds
