"""Character averages, the correlation-sum certificate, and subgroup integrals."""

import math
from fractions import Fraction

import numpy as np
import pytest

from rieszlab import (
    JointCharacter,
    KroneckerGroup,
    NamedIrrational,
    SlopedSubgroup,
    TorusCharacter,
    TorusSequence,
    WeightScheme,
    WindowSchedule,
    haar_integral,
    joint_floor_fraction_report,
    make_catalog_function,
    vdc_certificate,
    wd_report,
    weyl_sum,
)
from rieszlab.differences import RealSequence
from rieszlab.equidist import as_exact_real, torus_character_psi

F = Fraction
SQRT2 = math.sqrt(2.0)


def sqrt_weights():
    return WeightScheme.from_function(make_catalog_function("power", b=F(1), c=F(1, 2)), 0)


class TestWeylSum:
    def test_trivial_character_exactly_one(self):
        W = sqrt_weights()
        x = TorusSequence(lambda ns: np.sqrt(ns.astype(np.float64)) % 1.0, 1)
        assert weyl_sum(x, TorusCharacter((0,)), W, 10, 10_000) == 1.0

    def test_weight_fractional_parts_decay(self):
        W = sqrt_weights()
        x = TorusSequence(lambda ns: np.sqrt(ns.astype(np.float64)) % 1.0, 1)
        est = weyl_sum(x, TorusCharacter((1,)), W, 1000, 1_200_000)
        assert abs(est) < 0.05

    def test_rational_orbit_with_annihilating_character(self):
        # x(n) = n/3 mod 1 and frequency 3: e(n) = 1 identically
        W = WeightScheme(RealSequence(lambda n: float(n), label="n"))
        x = TorusSequence(lambda ns: (ns / 3.0) % 1.0, 1)
        est = weyl_sum(x, TorusCharacter((3,)), W, 1, 20_000)
        assert est == pytest.approx(1.0, abs=1e-9)


class TestWDReport:
    def test_combination_with_nonzero_head_coefficient(self):
        f = make_catalog_function("power", b=F(1), c=F(5, 2))  # level 2
        W = WeightScheme.from_function(f, 2)
        seq = RealSequence(
            lambda n: f(n),
            label="f",
            vector_fn=lambda ns: f.values(ns),
        )
        x = TorusSequence.from_real_sequence(seq)
        schedule = WindowSchedule.geometric(W, n0=5000, count=4, seed=0)
        report = wd_report(x, W, [TorusCharacter((1,))], schedule, [0.0])
        assert report.all_pass

    def test_decaying_perturbation_keeps_verdict(self):
        f = make_catalog_function("power", b=F(1), c=F(5, 2))
        W = WeightScheme.from_function(f, 2)
        schedule = WindowSchedule.geometric(W, n0=5000, count=4, seed=0)
        x_plain = TorusSequence(lambda ns: f.values(ns) % 1.0, 1)
        x_bumped = TorusSequence(
            lambda ns: (f.values(ns) + 1.0 / ns.astype(np.float64)) % 1.0, 1
        )
        r1 = wd_report(x_plain, W, [TorusCharacter((1,))], schedule, [0.0])
        r2 = wd_report(x_bumped, W, [TorusCharacter((1,))], schedule, [0.0])
        assert r1.all_pass and r2.all_pass
        assert abs(r1.entries[0].estimate - r2.entries[0].estimate) < 0.01

    def test_floor_character_with_half(self):
        f = make_catalog_function("power", b=F(1), c=F(3, 2))
        W = WeightScheme.from_function(f, 1)
        g = f.floor_vector_fn

        def values_fn(ns):
            return (g(ns) % 2) / 2.0

        x = TorusSequence(values_fn, 1)
        schedule = WindowSchedule.geometric(W, n0=40_000, count=4, seed=0)
        K = KroneckerGroup((F(1, 2),))
        taus = [(1,), (2,), (3,)]
        expected = [K.character_expectation(t) for t in taus]
        assert expected == [0.0, 1.0, 0.0]
        report = wd_report(
            x, W, [TorusCharacter(t) for t in taus], schedule, expected
        )
        assert report.all_pass


class TestVdcCertificate:
    def test_constant_sequence_holds_with_large_rhs(self):
        cert = vdc_certificate(np.ones(256))
        assert cert.lhs == pytest.approx(1.0)
        assert cert.rhs >= 1.0
        assert cert.holds

    def test_irrational_rotation_sequence(self):
        u = np.exp(2j * np.pi * SQRT2 * np.arange(1, 2049))
        cert = vdc_certificate(u)
        assert cert.lhs < 0.01
        assert cert.holds

    def test_seeded_random_unit_sequences(self):
        rng = np.random.default_rng(123)
        for _ in range(60):
            N = int(rng.integers(16, 4097))
            u = np.exp(2j * np.pi * rng.random(N))
            assert vdc_certificate(u).holds

    def test_norm_guard(self):
        with pytest.raises(ValueError):
            vdc_certificate(np.array([1.0, 2.0, 0.5, 0.5]))

    def test_short_input_rejected(self):
        with pytest.raises(ValueError):
            vdc_certificate(np.ones(3))


class TestHaarIntegral:
    def test_constant_function_normalized(self):
        H = SlopedSubgroup.rational(1, 2)
        assert haar_integral(H, lambda x, y: np.ones_like(x), 10_000) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_half_slope_nontrivial_character_vanishes(self):
        H = SlopedSubgroup.rational(1, 2)
        val = haar_integral(H, torus_character_psi(1, 0), 10**5)
        assert abs(val) < 1e-6

    def test_half_slope_annihilating_character(self):
        H = SlopedSubgroup.rational(1, 2)
        val = haar_integral(H, torus_character_psi(-1, 2), 10**5)
        assert val == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("a,b", [(1, 2), (1, 3), (2, 5)])
    def test_annihilator_rule_all_small_characters(self, a, b):
        H = SlopedSubgroup.rational(a, b)
        for tau_x in range(-5, 6):
            for tau_y in range(-5, 6):
                expected = 1.0 if tau_x * b + tau_y * a == 0 else 0.0
                assert H.character_integral(tau_x, tau_y) == expected
                val = haar_integral(H, torus_character_psi(tau_x, tau_y), 20_000)
                assert abs(val - expected) <= 1e-6, (tau_x, tau_y)

    def test_irrational_slope_fills_torus(self):
        H = SlopedSubgroup.irrational("sqrt2")
        assert abs(haar_integral(H, torus_character_psi(1, 1), 40_000)) < 1e-9
        assert haar_integral(H, torus_character_psi(0, 0), 40_000) == pytest.approx(1.0)

    def test_fractional_part_integrand_cell_splitting(self):
        # psi depends on the fractional coordinate discontinuously; midpoint
        # with cell splitting still integrates it to O(1/resolution)
        H = SlopedSubgroup.rational(1, 2)
        psi = lambda x, y: x  # {t} on the line's first coordinate
        val = haar_integral(H, psi, 10**5).real
        # (1/2) * integral_0^2 {t} dt = 1/2
        assert val == pytest.approx(0.5, abs=1e-4)

    def test_zero_resolution_rejected(self):
        with pytest.raises(ValueError):
            haar_integral(SlopedSubgroup.rational(1, 2), lambda x, y: x, 0)


class TestKroneckerGroup:
    def test_rational_annihilator(self):
        K = KroneckerGroup((F(1, 3),))
        assert K.annihilates((3,))
        assert K.annihilates((6,))
        assert not K.annihilates((1,))

    def test_irrational_annihilator_needs_zero(self):
        K = KroneckerGroup((NamedIrrational("sqrt2", SQRT2),))
        assert K.annihilates((0,))
        assert not K.annihilates((1,))

    def test_matching_irrationals_cancel(self):
        K = KroneckerGroup(
            (NamedIrrational("sqrt2", SQRT2), NamedIrrational("sqrt2", SQRT2))
        )
        assert K.annihilates((1, -1))
        assert not K.annihilates((1, 1))

    def test_as_exact_real_rejects_bare_floats(self):
        with pytest.raises(ValueError):
            as_exact_real(0.4142)


class TestJointReport:
    def make(self, characters, alpha=None, tol=None):
        f = make_catalog_function("power", b=F(1), c=F(3, 2))
        W = WeightScheme.from_function(f, 1)
        schedule = WindowSchedule.geometric(W, n0=40_000, count=4, seed=0)
        K = KroneckerGroup(alpha or (F(1, 2),))
        return joint_floor_fraction_report(f, 1, K, characters, schedule, W=W, tol=tol)

    def test_trivial_character_passes(self):
        chi = JointCharacter(taus=((0,), (0,)), hs=(0, 0))
        report = self.make([chi])
        assert report.entries[0].expected == 1.0
        assert report.all_pass

    def test_half_alpha_order_zero_character(self):
        chi = JointCharacter(taus=((1,), (0,)), hs=(0, 0))
        report = self.make([chi])
        assert report.entries[0].expected == 0.0
        assert report.all_pass

    def test_integer_alpha_part_with_fraction_character(self):
        # every <alpha, tau_i> integral but some h_i nonzero: expected 0
        chi = JointCharacter(taus=((2,), (0,)), hs=(0, 1))
        report = self.make([chi])
        assert report.entries[0].expected == 0.0
        assert report.all_pass
