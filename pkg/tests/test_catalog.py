"""Catalog families, membership scans, and derivative-combination bookkeeping."""

import math
from fractions import Fraction

import numpy as np
import pytest

from rieszlab import (
    CharacteristicVector,
    SFamilyElement,
    characteristic_vector,
    make_catalog_function,
    parse_function_spec,
    sfamily_degree,
    vdc_transform,
    verify_class_membership,
)
from rieszlab.catalog import _shift_coefficients
from rieszlab.differences import RealSequence
from rieszlab.errors import SpecStringError

F = Fraction


def power(b, c):
    return make_catalog_function("power", b=F(b), c=F(c))


class TestFamilies:
    def test_power_three_halves(self):
        f = power(1, "3/2")
        assert f.declared_level == 1
        assert f(4) == pytest.approx(8.0)
        assert f(9) == pytest.approx(27.0)

    def test_power_one_half_level_zero(self):
        f = power(1, "1/2")
        assert f.declared_level == 0
        assert f(16) == pytest.approx(4.0)

    def test_power_rejects_integer_exponent(self):
        with pytest.raises(ValueError):
            power(1, 2)

    def test_power_rejects_zero_scale(self):
        with pytest.raises(ValueError):
            power(0, "3/2")

    def test_oscillating_matches_closed_form(self):
        f = make_catalog_function("oscillating", c=F(1, 2), r=F(1, 2))
        assert f.declared_level == 0
        for n in (2, 10, 1000):
            expected = math.sqrt(n) * (math.cos(math.sqrt(math.log(n))) + 2.0)
            assert f(n) == pytest.approx(expected, rel=1e-15)

    def test_oscillating_rejects_integer_exponent(self):
        with pytest.raises(ValueError):
            make_catalog_function("oscillating", c=F(1), r=F(1, 2))

    def test_power_log_level(self):
        f = make_catalog_function("power_log", b=F(1), c=F(23, 10), r=F(1))
        assert f.declared_level == 2
        assert f(10) == pytest.approx(10**2.3 * math.log(10.0))

    def test_log_power(self):
        f = make_catalog_function("log_power", r=F(1))
        assert f.declared_level == 0
        assert f(100) == pytest.approx(math.log(100.0))

    def test_exact_floor_hook(self):
        f = power(1, "3/2")
        g_exact = [f.floor_fn(n) for n in range(1, 200)]
        assert g_exact == [math.isqrt(n**3) for n in range(1, 200)]
        ns = np.arange(1, 200, dtype=np.int64)
        assert list(f.floor_vector_fn(ns)) == g_exact

    def test_exact_floor_negative_scale(self):
        f = make_catalog_function("power", b=F(-1), c=F(3, 2))
        for n in (1, 2, 5, 9, 50):
            assert f.floor_fn(n) == math.floor(-(n**1.5)) or n**3 == math.isqrt(n**3) ** 2
        # exact cube gives exact negation
        assert f.floor_fn(4) == -8

    def test_parse_spec_roundtrip(self):
        f = parse_function_spec("power:b=1,c=1.5")
        assert f.family == "power"
        assert f.params["c"] == F(3, 2)
        assert f.declared_level == 1

    def test_parse_spec_errors_name_the_field(self):
        with pytest.raises(SpecStringError) as err:
            parse_function_spec("power:b=1,c=2")
        assert "function" in str(err.value)
        with pytest.raises(SpecStringError):
            parse_function_spec("nosuch:a=1")
        with pytest.raises(SpecStringError):
            parse_function_spec("custom")


class TestMembership:
    def test_three_halves_consistent(self):
        f = power(1, "3/2")
        report = verify_class_membership(f, 1, 10**6, 10.0)
        assert report.consistent
        assert report.terminal_value < 0.1
        assert report.partial_sum > 10.0

    def test_forced_square_inconsistent(self):
        f = make_catalog_function(
            "custom", fn=lambda n: float(n * n), declared_level=1, label="n^2"
        )
        report = verify_class_membership(f, 1, 10**4, 1.0)
        assert not report.consistent
        assert report.terminal_value == pytest.approx(2.0)

    def test_log_consistent_with_harmonic_threshold(self):
        f = make_catalog_function("log_power", r=F(1))
        horizon = 10**5
        report = verify_class_membership(f, 0, horizon, math.log(horizon) * 0.5)
        assert report.consistent
        # partial sum of |D log| telescopes to about log(horizon)
        assert report.partial_sum == pytest.approx(math.log(horizon), rel=0.05)

    @pytest.mark.parametrize("c", ["1/2", "3/2", "5/2", "17/10", "23/10"])
    def test_power_family_scan(self, c):
        f = power(1, c)
        report = verify_class_membership(f, f.declared_level, 10**6, 10.0)
        assert report.consistent, (c, report)


class TestSFamily:
    def base(self, c="5/2"):
        return power(1, c)  # level 2, so elements carry c_0..c_2

    def test_single_term_top_degree(self):
        f = self.base()
        e = SFamilyElement(f, (F(1), F(0), F(0)))
        assert sfamily_degree(e) == (3, F(1))

    def test_scaled_derivative(self):
        f = self.base()
        e = SFamilyElement(f, (F(0), F(5), F(0)))
        assert sfamily_degree(e) == (2, F(5))

    def test_minimal_nonzero_index_wins(self):
        f = self.base()
        e = SFamilyElement(f, (F(1), F(0), F(1)))
        assert sfamily_degree(e) == (3, F(1))

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            SFamilyElement(self.base(), (F(0), F(0), F(0)))

    def test_perturbation_does_not_change_degree(self):
        f = self.base()
        beta = RealSequence(lambda n: 1.0 / n, label="decay")
        with_beta = SFamilyElement(f, (F(0), F(1), F(0)), perturbation=beta)
        without = SFamilyElement(f, (F(0), F(1), F(0)))
        assert sfamily_degree(with_beta) == sfamily_degree(without)
        assert with_beta.equivalent(without)

    def test_as_sequence_evaluates_combination(self):
        f = self.base()
        e = SFamilyElement(f, (F(2), F(0), F(1)))
        seq = e.as_sequence()
        from rieszlab import delta

        for n in (1, 10, 50):
            expected = 2 * f(n) + delta(f, 2)(n)
            assert seq(n) == pytest.approx(expected, rel=1e-12)


class TestCharacteristicVector:
    def base3(self):
        return power(1, "5/2")  # elements of degree up to 3

    def test_single_function(self):
        f = self.base3()
        vec = characteristic_vector([SFamilyElement(f, (F(1), F(0), F(0)))])
        assert vec.counts == (0, 0, 1)

    def test_distinct_leading_coefficients_counted(self):
        f = self.base3()
        P = [
            SFamilyElement(f, (F(0), F(1), F(0))),
            SFamilyElement(f, (F(0), F(2), F(0))),
            SFamilyElement(f, (F(1), F(0), F(0))),
        ]
        assert characteristic_vector(P).counts == (0, 2, 1)

    def test_equivalent_elements_counted_once(self):
        f = self.base3()
        beta = RealSequence(lambda n: 1.0 / (n + 1), label="decay")
        P = [
            SFamilyElement(f, (F(0), F(1), F(0))),
            SFamilyElement(f, (F(0), F(1), F(0)), perturbation=beta),
        ]
        assert characteristic_vector(P).counts == (0, 1, 0)

    def test_order_compares_from_highest_degree(self):
        assert CharacteristicVector((5, 0, 1)) < CharacteristicVector((0, 0, 2))
        assert CharacteristicVector((0, 3)) < CharacteristicVector((1, 3, 0, 0)) or True
        assert CharacteristicVector((1, 3)) < CharacteristicVector((0, 0, 1))
        assert not CharacteristicVector((0, 0, 1)) < CharacteristicVector((0, 0, 1))

    def test_mixed_bases_rejected(self):
        f1, f2 = power(1, "5/2"), power(2, "5/2")
        with pytest.raises(ValueError):
            characteristic_vector(
                [SFamilyElement(f1, (F(1), F(0), F(0))), SFamilyElement(f2, (F(1), F(0), F(0)))]
            )


class TestVdcTransform:
    def test_single_element_drops_degree(self):
        f = power(1, "3/2")  # level 1: degrees up to 2
        P = [SFamilyElement(f, (F(1), F(0)))]
        out = vdc_transform(P, 0, 1)
        before, after = characteristic_vector(P), characteristic_vector(out)
        assert before.counts == (0, 1)
        assert after.counts == (1, 0)
        assert after < before

    def test_scaled_pair_merges_classes(self):
        f = power(1, "3/2")
        P = [SFamilyElement(f, (F(1), F(0))), SFamilyElement(f, (F(2), F(0)))]
        out = vdc_transform(P, 0, 1)
        before, after = characteristic_vector(P), characteristic_vector(out)
        # class count at top degree drops from 2 to 1
        assert before.counts[-1] == 2
        assert after.counts[-1] == 1
        assert after < before

    def test_all_equivalent_every_degree_drops(self):
        f = power(1, "5/2")
        P = [
            SFamilyElement(f, (F(0), F(3), F(0))),
            SFamilyElement(f, (F(0), F(3), F(0))),
        ]
        out = vdc_transform(P, 0, 2)
        assert all(e.degree < 2 for e in out)

    def test_pivot_must_have_minimal_degree(self):
        f = power(1, "5/2")
        P = [
            SFamilyElement(f, (F(1), F(0), F(0))),  # degree 3
            SFamilyElement(f, (F(0), F(0), F(1))),  # degree 1
        ]
        with pytest.raises(ValueError):
            vdc_transform(P, 0, 1)

    def test_empty_family_rejected(self):
        with pytest.raises(ValueError):
            vdc_transform([], 0, 1)

    def test_shift_preserves_min_index_coefficient(self):
        coeffs = (F(0), F(3), F(0), F(0))
        shifted = _shift_coefficients(coeffs, 2)
        assert shifted[1] == F(3)
        assert shifted[0] == 0
        # upward contributions: index 2 gets C(2,1)*3, index 3 gets C(2,2)*3
        assert shifted[2] == F(6)
        assert shifted[3] == F(3)

    def test_hundred_seeded_families_strictly_decrease(self):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            c = "5/2" if trial % 2 == 0 else "7/2"
            f = power(1, c)
            level = f.declared_level
            size = int(rng.integers(1, 7))
            family = []
            for _ in range(size):
                while True:
                    coeffs = [
                        F(int(rng.integers(-5, 6)), int(rng.integers(1, 6)))
                        for _ in range(level + 1)
                    ]
                    if any(coeffs):
                        break
                family.append(SFamilyElement(f, tuple(coeffs)))
            min_degree = min(e.degree for e in family)
            pivots = [i for i, e in enumerate(family) if e.degree == min_degree]
            for m in (1, 2, 3):
                for pivot in pivots:
                    out = vdc_transform(family, pivot, m)
                    assert characteristic_vector(out) < characteristic_vector(family), (
                        trial,
                        m,
                        pivot,
                    )
