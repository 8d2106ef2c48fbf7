import dataclasses
import math

import numpy as np
import pytest

from zetalab import ladder, quad, zeros
from zetalab.errors import (BudgetError, ConventionError, DomainError,
                            NoBracketError)

TWO_PI_SQ = 2.0 * math.pi ** 2


def linear_curve(slope, T=1000.0, U=10.0, step=0.01):
    """Synthetic curve via the constant-integrand hook; phi is exactly linear
    with the requested slope."""
    c = slope * math.log(T) ** 4 / TWO_PI_SQ
    return ladder.build_ladder(T, U, step,
                               integrand=lambda tt: np.full_like(tt, c))


class TestBuild:
    def test_preconditions(self):
        with pytest.raises(DomainError):
            ladder.build_ladder(5.0, 10.0, 0.01)
        with pytest.raises(DomainError):
            ladder.build_ladder(100.0, 0.0, 0.01)
        with pytest.raises(DomainError):
            ladder.build_ladder(100.0, 10.0, 0.2)

    def test_monotone_and_anchored_at_zero(self):
        cur = ladder.build_ladder(1000.0, 20.0, 0.01)
        assert cur.phi[0] == 0.0
        assert np.all(np.diff(cur.phi) >= 0.0)

    def test_matches_direct_integral(self):
        cur = ladder.build_ladder(1000.0, 50.0, 0.01)
        est = quad.integrate_z4(1000.0, 50.0, 1e-8)
        expect = TWO_PI_SQ * est.value / math.log(1000.0) ** 4
        assert abs(cur.phi[-1] - expect) / expect <= 1e-6

    def test_constant_integrand_gives_linear_curve(self):
        c = 3.7
        cur = ladder.build_ladder(1000.0, 10.0, 0.01,
                                  integrand=lambda tt: np.full_like(tt, c))
        want = TWO_PI_SQ * c / math.log(1000.0) ** 4
        slopes = np.diff(cur.phi) / cur.step
        assert np.allclose(slopes, want, rtol=1e-12)

    def test_subinterval_increment_matches_integral(self):
        cur = ladder.build_ladder(500.0, 30.0, 0.01)
        i, j = 700, 2300
        got = cur.phi[j] - cur.phi[i]
        est = quad.integrate_z4(500.0 + 0.01 * i, 0.01 * (j - i), 1e-9)
        want = TWO_PI_SQ * est.value / math.log(500.0) ** 4
        assert abs(got - want) / want <= 1e-7

    def test_local_log_convention(self):
        cur = ladder.build_ladder(1000.0, 5.0, 0.01,
                                  convention=ladder.Convention.LOCAL_LOG)
        est = quad.integrate_z4(1000.0, 5.0, 1e-9,
                                weight=lambda tt: np.log(tt) ** -4.0)
        assert abs(cur.phi[-1] - TWO_PI_SQ * est.value) <= 1e-6 * cur.phi[-1]

    def test_validity_warning_attached(self):
        u0 = ladder.validity_length(100.0)
        cur = ladder.build_ladder(100.0, u0 + 5.0, 0.05)
        assert any("validity" in w for w in cur.warnings)
        cur2 = ladder.build_ladder(100.0, u0 - 5.0, 0.05)
        assert cur2.warnings == []

    def test_budget_error(self):
        with pytest.raises(BudgetError):
            ladder.build_ladder(1000.0, 50.0, 0.01, budget=100)

    def test_normalization_shift_changes_no_slope(self):
        cur = ladder.build_ladder(1000.0, 10.0, 0.01)
        shifted = dataclasses.replace(cur, phi=cur.phi + 5.0)
        for n, m in [(1000.0, 1003.0), (1001.234, 1009.87)]:
            assert ladder.chord(cur, n, m).slope == \
                pytest.approx(ladder.chord(shifted, n, m).slope, abs=1e-12)


class TestChord:
    def test_validation(self):
        cur = linear_curve(1.0)
        with pytest.raises(DomainError):
            ladder.chord(cur, 1005.0, 1005.0)
        with pytest.raises(DomainError):
            ladder.chord(cur, 1005.0, 1002.0)
        with pytest.raises(DomainError):
            ladder.chord(cur, 999.0, 1005.0)

    def test_linear_curve_has_constant_slope(self):
        cur = linear_curve(1.4)
        rng = np.random.default_rng(3)
        for _ in range(20):
            n, m = sorted(rng.uniform(1000.0, 1010.0, size=2))
            if m - n < 1e-6:
                continue
            assert ladder.chord(cur, n, m).slope == pytest.approx(1.4, rel=1e-9)

    def test_weighted_average_identity(self):
        cur = ladder.build_ladder(1000.0, 20.0, 0.01)
        n, k, m = 1000.0, 1007.0, 1020.0
        s_nm = ladder.chord(cur, n, m).slope
        s_nk = ladder.chord(cur, n, k).slope
        s_km = ladder.chord(cur, k, m).slope
        assert s_nm * (m - n) == pytest.approx(
            s_nk * (k - n) + s_km * (m - k), abs=1e-10)

    def test_weighted_average_identity_random_triples(self):
        cur = ladder.build_ladder(1000.0, 20.0, 0.01)
        rng = np.random.default_rng(23)
        for _ in range(10):
            n, k, m = np.sort(rng.uniform(1000.0, 1020.0, size=3))
            if k - n < 1e-3 or m - k < 1e-3:
                continue
            lhs = ladder.chord(cur, n, m).slope * (m - n)
            rhs = (ladder.chord(cur, n, k).slope * (k - n)
                   + ladder.chord(cur, k, m).slope * (m - k))
            assert lhs == pytest.approx(rhs, abs=1e-9)


class TestParallelChordScan:
    def test_contract_and_fundamental_inclusion(self):
        cur = ladder.build_ladder(1000.0, 30.0, 0.01)
        full = cur.t1 - cur.t0
        fund = ladder.chord(cur, cur.t0, cur.t1)
        tol = abs(fund.slope - 1.0) + 0.05
        scan = ladder.find_almost_parallel_chords(cur, [5.0, full - 1e-9], tol)
        assert all(abs(c.slope - 1.0) <= tol for c in scan.chords)
        # the full-window chord itself passes at this tolerance
        assert any(abs(c.n - cur.t0) < 1e-9 and c.m > cur.t1 - 0.02
                   for c in scan.chords)
        assert 0.0 <= min(scan.fractions.values())
        assert max(scan.fractions.values()) <= 1.0

    def test_tol_validation(self):
        cur = linear_curve(1.0)
        with pytest.raises(DomainError):
            ladder.find_almost_parallel_chords(cur, [5.0], -0.1)
        with pytest.raises(DomainError):
            ladder.find_almost_parallel_chords(cur, [100.0], 0.1)

    def test_passing_fraction_positive_at_1e4(self, curve_1e4_500):
        # long chords at this height all ride the desk-scale slope excess
        # (mean slope ~1.8 under the anchored log), so the almost-parallel
        # population lives at short lengths where slopes fluctuate through 1
        scan = ladder.find_almost_parallel_chords(curve_1e4_500, [1.0, 5.0], 0.2)
        assert scan.fractions[1.0] > 0.0
        assert scan.fractions[5.0] > 0.0
        long_scan = ladder.find_almost_parallel_chords(curve_1e4_500, [250.0], 0.2)
        assert long_scan.fractions[250.0] == 0.0


class TestUnitSlopeChord:
    def test_contract_on_synthetic_convex_curve(self):
        # derivative grows linearly from 0 to 2: a unit-slope chord must exist
        T, U = 1000.0, 10.0
        scale = math.log(T) ** 4 / TWO_PI_SQ
        cur = ladder.build_ladder(
            T, U, 0.01, integrand=lambda tt: scale * 2.0 * (tt - T) / U)
        ch = ladder.find_unit_slope_chord(cur, T)
        assert abs(ch.slope - 1.0) <= 1e-9
        assert ch.m == pytest.approx(T + U, rel=1e-3)  # mean hits 1 at the end

    def test_no_bracket_reports_range(self):
        cur = linear_curve(0.5)
        with pytest.raises(NoBracketError) as err:
            ladder.find_unit_slope_chord(cur, 1000.0)
        lo, hi = err.value.scanned_range
        assert lo <= 0.51 and hi <= 0.51

    def test_microscopic_instance_near_a_zero_at_1e4(self):
        # the running mean from just after a zero crosses 1 within one unit
        # for typical zeros at this height
        zs = zeros.find_zeros(10000.0, 10030.0)
        cur = ladder.build_ladder(10000.0, 30.0, 0.001, anchor=10000.0)
        best = math.inf
        for g in zs[:-1]:
            try:
                ch = ladder.find_unit_slope_chord(cur, float(g) + 0.001)
            except NoBracketError:
                continue
            best = min(best, ch.m - ch.n)
            assert abs(ch.slope - 1.0) <= 1e-9
        assert best < 1.0


class TestFundamentalChord:
    def test_deviation_shrinks_with_height(self):
        # the full-window chord slope drifts toward 1 as T grows; only the
        # direction is gated here (the magnitude at desk scale is owned by
        # the acceptance suite)
        devs = []
        for T in (1e3, 1e4, 1e5):
            u0 = ladder.validity_length(T)
            cur = ladder.build_ladder(T, u0, 0.05, anchor=T)
            devs.append(abs(ladder.chord(cur, cur.t0, cur.t1).slope - 1.0))
        assert devs[0] > devs[1] > devs[2]


class TestVerifyTheorem:
    def test_anchor_log_identity(self, curve_1e4_500):
        rep = ladder.verify_theorem(curve_1e4_500, 10000.0, 10100.0)
        assert rep.rel_discrepancy <= 1e-6
        assert rep.drift_bound is None

    def test_mean_value_equivalence(self, curve_1e4_500):
        # the interval mean of Z^4 relative to ln^4(anchor)/2pi^2 deviates
        # from 1 exactly as much as the chord slope does (both directions)
        for n, m in [(10020.0, 10030.0), (10100.0, 10400.0)]:
            rep = ladder.verify_theorem(curve_1e4_500, n, m)
            mean_ratio = rep.lhs / ((m - n) * math.log(10000.0) ** 4 / TWO_PI_SQ)
            assert abs(mean_ratio - rep.slope) <= 1e-6 * abs(rep.slope)

    def test_identity_on_random_subintervals(self, curve_1e4_500):
        # endpoints snapped to the grid: off-grid endpoints add the documented
        # O(step^2 phi'') linear-interpolation error on top of the identity
        rng = np.random.default_rng(31)
        step = curve_1e4_500.step
        for _ in range(10):
            n, m = np.sort(rng.uniform(10000.0, 10500.0, size=2))
            n = 10000.0 + round((n - 10000.0) / step) * step
            m = 10000.0 + round((m - 10000.0) / step) * step
            if m - n < 0.05:
                continue
            rep = ladder.verify_theorem(curve_1e4_500, float(n), float(m))
            assert rep.rel_discrepancy <= 1e-6

    def test_degenerate_interval(self, curve_1e4_500):
        rep = ladder.verify_theorem(curve_1e4_500, 10000.5, 10000.5 + 1e-6,
                                    quad_tol=1e-3)
        assert abs(rep.lhs) < 1e-4 and abs(rep.rhs) < 1e-4

    def test_local_log_raises_without_optin(self):
        cur = ladder.build_ladder(10000.0, 5.0, 0.01,
                                  convention=ladder.Convention.LOCAL_LOG)
        with pytest.raises(ConventionError):
            ladder.verify_theorem(cur, 10000.0, 10005.0)

    def test_integrand_hook_identity(self):
        # synthetic constant integrand: both sides of the identity are exact
        c = 2.5
        hook = lambda tt: np.full_like(tt, c)
        cur = ladder.build_ladder(1000.0, 10.0, 0.01, integrand=hook)
        rep = ladder.verify_theorem(cur, 1002.0, 1008.0, integrand=hook)
        assert rep.rel_discrepancy <= 1e-12

    def test_local_log_drift_quantified(self):
        cur = ladder.build_ladder(10000.0, 200.0, 0.02,
                                  convention=ladder.Convention.LOCAL_LOG)
        rep = ladder.verify_theorem(cur, 10000.0, 10200.0, allow_drift=True)
        assert rep.drift_bound is not None
        # the LocalLog reweighting shifts the identity by at most the drift
        assert rep.rel_discrepancy <= rep.drift_bound * 1.5 + 1e-6


class TestSerialization:
    def test_round_trip_preserves_slopes(self, tmp_path):
        cur = ladder.build_ladder(1000.0, 10.0, 0.01)
        path = str(tmp_path / "curve.csv")
        ladder.save_curve(cur, path)
        back = ladder.load_curve(path)
        assert back.convention is cur.convention
        assert back.anchor == cur.anchor
        rng = np.random.default_rng(4)
        for _ in range(10):
            n, m = sorted(rng.uniform(cur.t0, cur.t1, size=2))
            if m - n < 1e-6:
                continue
            assert abs(ladder.chord(cur, n, m).slope
                       - ladder.chord(back, n, m).slope) <= 1e-12
