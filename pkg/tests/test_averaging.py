"""Weighted window means, densities, syndeticity and thickness checks."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rieszlab import (
    SubsetOfNaturals,
    WeightScheme,
    WindowSchedule,
    banach_w_density,
    make_catalog_function,
    riesz_mean,
    thick_from_folner,
    thickness_check,
    upper_w_density,
    uw_lim_estimate,
    w_syndetic_check,
)
from rieszlab.averaging import random_probe_windows, thickness_run_target
from rieszlab.differences import RealSequence
from rieszlab.errors import DegenerateWindowError

F = Fraction


def sqrt_weights() -> WeightScheme:
    return WeightScheme.from_function(
        make_catalog_function("power", b=F(1), c=F(1, 2)), 0
    )


def linear_weights() -> WeightScheme:
    return WeightScheme(RealSequence(lambda n: float(n), label="n"))


def brute_riesz(a_fn, W_fn, M, N):
    """Loop-and-fsum oracle, independent of the vectorized path."""
    num = math.fsum((W_fn(n + 1) - W_fn(n)) * a_fn(n) for n in range(M, N))
    return num / (W_fn(N) - W_fn(M))


class TestRieszMean:
    def test_constant_averages_to_itself(self):
        W = sqrt_weights()
        assert riesz_mean(lambda n: 3.25, W, 5, 5000) == pytest.approx(3.25, abs=1e-12)

    def test_linear_weights_give_arithmetic_mean(self):
        W = linear_weights()
        rng = np.random.default_rng(3)
        vals = rng.random(500)
        a = lambda n: float(vals[n - 100])
        got = riesz_mean(a, W, 100, 600)
        assert got == pytest.approx(float(np.mean(vals)), abs=1e-12)

    def test_parity_indicator_along_sqrt(self):
        W = sqrt_weights()
        par = SubsetOfNaturals.from_predicate(
            lambda n: n % 2 == 0, vector_predicate=lambda ns: ns % 2 == 0
        )
        assert riesz_mean(par, W, 1000, 1_000_000) == pytest.approx(0.5, abs=0.01)

    def test_matches_brute_force_oracle(self):
        W = sqrt_weights()
        a = lambda n: math.sin(n) + 0.5
        got = riesz_mean(a, W, 50, 20_000)
        want = brute_riesz(a, math.sqrt, 50, 20_000)
        assert got == pytest.approx(want, rel=1e-12)

    def test_degenerate_window_rejected(self):
        W = sqrt_weights()
        with pytest.raises(DegenerateWindowError):
            riesz_mean(lambda n: 1.0, W, 10, 10)

    def test_bounded_by_sup(self):
        W = sqrt_weights()
        rng = np.random.default_rng(9)
        for _ in range(25):
            M = int(rng.integers(1, 5000))
            N = M + int(rng.integers(2, 5000))
            a = lambda n: math.cos(0.1 * n)
            assert abs(riesz_mean(a, W, M, N)) <= 1.0 + 1e-12

    def test_single_index_change_bounded_by_its_mass(self):
        W = sqrt_weights()
        M, N, k = 100, 5000, 777
        base = riesz_mean(lambda n: 1.0, W, M, N)
        bumped = riesz_mean(lambda n: 1.0 if n != k else -1.0, W, M, N)
        mass = (math.sqrt(k + 1) - math.sqrt(k)) / (math.sqrt(N) - math.sqrt(M))
        assert abs(bumped - base) <= 2 * mass + 1e-15

    @given(st.integers(2, 400), st.integers(2, 300))
    @settings(max_examples=40, deadline=None)
    def test_mean_of_unit_values_in_range(self, M, width):
        W = linear_weights()
        got = riesz_mean(lambda n: (-1.0) ** n, W, M, M + width)
        assert -1.0 - 1e-12 <= got <= 1.0 + 1e-12


class TestUWEstimate:
    def test_constant_converges(self):
        W = sqrt_weights()
        schedule = WindowSchedule.geometric(W, n0=100, count=5, seed=1)
        report = uw_lim_estimate(lambda n: 1.0, W, schedule)
        assert report.converged(1e-9)
        assert all(complex(e).real == pytest.approx(1.0, abs=1e-12) for e in report.estimates)

    def test_character_of_weight_decays(self):
        # e(W(n)) with W = sqrt(n): estimates shrink toward 0
        W = sqrt_weights()
        windows = [(100, 50_000), (100, 400_000), (1000, 1_200_000)]
        schedule = WindowSchedule(tuple(windows))
        a = lambda ns: np.exp(2j * np.pi * np.sqrt(ns))

        class Seq:
            def values(self, ns):
                return a(ns.astype(np.float64))

        report = uw_lim_estimate(Seq(), W, schedule)
        assert abs(report.estimates[-1]) < 0.05

    def test_alternating_sign_decays(self):
        W = sqrt_weights()
        schedule = WindowSchedule(((100, 50_000), (100, 200_000), (50, 800_000)))
        report = uw_lim_estimate(lambda n: (-1.0) ** n, W, schedule)
        assert abs(report.estimates[-1]) < 0.01

    def test_short_schedule_rejected(self):
        W = sqrt_weights()
        with pytest.raises(ValueError):
            uw_lim_estimate(lambda n: 1.0, W, WindowSchedule(((1, 10), (1, 100))))


class TestDensities:
    def test_full_set_density_one(self):
        W = sqrt_weights()
        assert upper_w_density(SubsetOfNaturals.naturals(), W, [10**3, 10**4, 10**5]) == (
            pytest.approx(1.0, abs=1e-12)
        )

    def test_evens(self):
        W = sqrt_weights()
        evens = SubsetOfNaturals.from_predicate(
            lambda n: n % 2 == 0, vector_predicate=lambda ns: ns % 2 == 0
        )
        got = upper_w_density(evens, W, [10**4, 10**5, 4 * 10**5, 10**6])
        assert got == pytest.approx(0.5, abs=0.01)

    def test_small_fraction_of_sqrt(self):
        W = sqrt_weights()
        R = SubsetOfNaturals.from_predicate(
            lambda n: math.sqrt(n) % 1.0 < 1 / 3,
            vector_predicate=lambda ns: np.sqrt(ns.astype(np.float64)) % 1.0 < 1 / 3,
        )
        got = upper_w_density(R, W, [10**4, 10**5, 4 * 10**5, 10**6])
        assert got == pytest.approx(1 / 3, abs=0.02)

    @pytest.mark.parametrize(
        "weight_fn,level",
        [
            (("power", {"b": F(1), "c": F(1, 2)}), 0),
            (("power", {"b": F(1), "c": F(3, 2)}), 1),
            (("log_power", {"r": F(1)}), 0),
        ],
    )
    def test_at_most_natural_density_proxy(self, weight_fn, level):
        # weighted density of the evens should not exceed natural density + slack
        family, params = weight_fn
        W = WeightScheme.from_function(make_catalog_function(family, **params), level)
        evens = SubsetOfNaturals.from_predicate(
            lambda n: n % 2 == 0, vector_predicate=lambda ns: ns % 2 == 0
        )
        got = upper_w_density(evens, W, [10**4, 10**5, 10**6])
        assert got <= 0.5 + 0.02

    def test_banach_brackets(self):
        W = sqrt_weights()
        schedule = WindowSchedule.geometric(W, n0=1000, count=6, seed=4)
        lo, hi = banach_w_density(SubsetOfNaturals.naturals(), W, schedule)
        assert lo == pytest.approx(1.0, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-12)

        # finitely supported indicator: upper bracket shrinks as spans grow
        finite = SubsetOfNaturals.from_members(range(1, 50))
        small = WindowSchedule(((1, 10_000),))
        large = WindowSchedule(((1, 1_000_000), (2, 2_000_000), (1, 4_000_000)))
        _, hi_small = banach_w_density(finite, W, small)
        _, hi_large = banach_w_density(finite, W, large)
        assert hi_large < hi_small
        assert hi_large < 0.01

        schedule2 = WindowSchedule(((1, 10_000), (1, 100_000), (1, 1_000_000)))
        blocky = SubsetOfNaturals.from_predicate(
            lambda n: math.floor(math.sqrt(n)) % 2 == 0,
            vector_predicate=lambda ns: np.floor(np.sqrt(ns.astype(np.float64))) % 2 == 0,
        )
        lo3, hi3 = banach_w_density(blocky, W, schedule2)
        assert lo3 < 0.55 and hi3 > 0.45


class TestSyndeticity:
    def test_full_set_passes(self):
        W = sqrt_weights()
        probes = random_probe_windows(W, 2.0, 50, seed=3, lo=10, hi=10**6)
        report = w_syndetic_check(SubsetOfNaturals.naturals(), W, 2.0, probes)
        assert report.passed
        assert report.min_mass >= 2.0 - 1e-9

    def test_empty_set_fails_with_witness(self):
        W = sqrt_weights()
        probes = random_probe_windows(W, 2.0, 10, seed=3, lo=10, hi=10**5)
        report = w_syndetic_check(SubsetOfNaturals.empty(), W, 2.0, probes)
        assert not report.passed
        assert report.witness == probes[0]

    def test_fractional_window_set_passes(self):
        W = sqrt_weights()
        R = SubsetOfNaturals.from_predicate(
            lambda n: math.sqrt(n) % 1.0 < 0.4,
            vector_predicate=lambda ns: np.sqrt(ns.astype(np.float64)) % 1.0 < 0.4,
        )
        probes = random_probe_windows(W, 5.0, 200, seed=17, lo=10**3, hi=10**7)
        report = w_syndetic_check(R, W, 5.0, probes)
        assert report.passed

    def test_short_window_rejected(self):
        W = sqrt_weights()
        with pytest.raises(ValueError):
            w_syndetic_check(SubsetOfNaturals.naturals(), W, 5.0, [(100, 101)])


class TestThickness:
    def test_full_set_single_run(self):
        report = thickness_check(SubsetOfNaturals.naturals(), 10, 5000)
        assert report.passed
        assert report.runs == [(1, 5000)]

    def test_evens_fail_for_two(self):
        evens = SubsetOfNaturals.from_predicate(
            lambda n: n % 2 == 0, vector_predicate=lambda ns: ns % 2 == 0
        )
        assert not thickness_check(evens, 2, 5000).passed
        assert thickness_check(evens, 1, 5000).passed

    def test_fractional_power_runs(self):
        R = SubsetOfNaturals.from_predicate(
            lambda n: (n**1.5) % 1.0 < 0.9,
            vector_predicate=lambda ns: np.power(ns.astype(np.float64), 1.5) % 1.0 < 0.9,
        )
        report = thickness_check(R, 10, 10**5)
        assert report.passed
        assert report.longest_run >= 10

    def test_run_target_default(self):
        assert thickness_run_target(10**5) == 10
        assert thickness_run_target(10**4) == 5
        assert thickness_run_target(10**7) == 20


class TestFolner:
    def test_constant_meets_hypothesis(self):
        schedule = WindowSchedule(((1, 100), (1, 1000), (1, 5000)))
        report = thick_from_folner(lambda n: 2.0, L=2.0, epsilon=0.1, schedule=schedule)
        assert report.hypothesis_met
        assert report.passed
        assert report.thickness.runs[0][1] >= 10

    def test_oscillation_fails_hypothesis(self):
        schedule = WindowSchedule(((1, 100), (1, 1000), (1, 5000)))
        eps = 0.1
        x = lambda n: 2.0 + (-1.0) ** n * 2 * eps
        report = thick_from_folner(x, L=2.0, epsilon=eps, schedule=schedule)
        assert not report.hypothesis_met
        assert report.thickness is None

    def test_rotation_return_measures_on_block_aligned_windows(self):
        # x_n = mu(A cap T^(-floor f(n)) A) for the sqrt2 rotation with
        # A = [0, 0.3): on windows aligned to runs where floor(f(n))*sqrt2
        # stays near 0 mod 1, the deviation |x_n - mu(A)| averages small and
        # the exceedance set is thick.  x is computed here from the exact
        # arc-overlap formula, independent of the recurrence module.
        from rieszlab import floor_sequence

        f = make_catalog_function("power", b=F(1), c=F(3, 2))
        g = floor_sequence(f)

        def dist_vals(ns):
            s = np.mod(g.values(ns).astype(np.float64) * math.sqrt(2.0), 1.0)
            return np.minimum(s, 1.0 - s)

        class MeasureSeq:
            def values(self, ns):
                return np.maximum(0.0, 0.3 - dist_vals(np.asarray(ns, dtype=np.int64)))

        horizon = 200_000
        ns = np.arange(1, horizon + 1, dtype=np.int64)
        near = SubsetOfNaturals.from_predicate(
            lambda n: dist_vals(np.array([n]))[0] < 0.05,
            vector_predicate=lambda ns: dist_vals(ns) < 0.05,
        )
        runs = thickness_check(near, 8, horizon).runs
        windows = sorted(((a, a + length) for a, length in runs), key=lambda w: w[1] - w[0])
        assert len(windows) >= 3
        schedule = WindowSchedule(tuple(windows[-3:]))
        report = thick_from_folner(
            MeasureSeq(), L=0.3, epsilon=0.2, schedule=schedule, run_target=10
        )
        assert report.hypothesis_met
        assert report.passed


class TestSchedules:
    def test_geometric_deterministic_and_increasing(self):
        W = sqrt_weights()
        s1 = WindowSchedule.geometric(W, n0=500, count=8, seed=42)
        s2 = WindowSchedule.geometric(W, n0=500, count=8, seed=42)
        assert s1.windows == s2.windows
        spans = s1.spans(W)
        assert all(b > a for a, b in zip(spans, spans[1:]))

    def test_invalid_window_rejected(self):
        with pytest.raises(ValueError):
            WindowSchedule(((10, 5),))
