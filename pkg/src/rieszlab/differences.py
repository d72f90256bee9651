"""Discrete difference calculus on integer-indexed sequences.

The forward difference (Df)(n) = f(n+1) - f(n) and its iterates are the
backbone of everything else in the package: shifts expand as binomial
combinations of differences (Newton's forward formula), differences expand
as alternating binomial combinations of shifts, and floors of real
sequences satisfy an exact identity relating D^h(floor f) to D^h f through
fractional parts.

Differences are always computed through the alternating binomial sum, so
every operation here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import (
    BoundaryAmbiguityError,
    DomainError,
    NumericalConsistencyError,
)

MAX_DIFFERENCE_ORDER = 60
FLOAT_EXACT_INT_LIMIT = 2**53
BOUNDARY_TOL = 1e-9
ROUNDING_GUARD = 1e-6


def binomial_row(h: int) -> list[int]:
    """Row h of Pascal's triangle; order capped so C(h, i) stays well inside 128 bits."""
    if h < 0:
        raise ValueError(f"difference order must be >= 0, got {h}")
    if h > MAX_DIFFERENCE_ORDER:
        raise OverflowError(
            f"difference order {h} exceeds the supported cap {MAX_DIFFERENCE_ORDER}"
        )
    return [math.comb(h, i) for i in range(h + 1)]


class RealSequence:
    """A deterministic evaluable map from {domain_start, domain_start+1, ...} to R.

    Optional hooks carried by concrete families:
      vector_fn       -- vectorized evaluation on an int64/float64 numpy array
      floor_fn        -- exact integer floor of the true real value at n
      floor_vector_fn -- exact floors on an index array
    """

    def __init__(
        self,
        fn: Callable[[int], float],
        domain_start: int = 1,
        label: str = "",
        vector_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        floor_fn: Optional[Callable[[int], int]] = None,
        floor_vector_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        if domain_start < 1:
            raise ValueError("domain_start must be >= 1")
        self.fn = fn
        self.domain_start = domain_start
        self.label = label
        self._vector_fn = vector_fn
        self.floor_fn = floor_fn
        self.floor_vector_fn = floor_vector_fn

    def __call__(self, n: int) -> float:
        if n < self.domain_start:
            raise DomainError(
                f"{self.label or 'sequence'} evaluated at n={n} < domain_start={self.domain_start}"
            )
        return float(self.fn(n))

    def values(self, ns: np.ndarray) -> np.ndarray:
        """Evaluate on an array of indices (all >= domain_start)."""
        ns = np.asarray(ns)
        if ns.size and int(ns.min()) < self.domain_start:
            raise DomainError(
                f"{self.label or 'sequence'} evaluated below domain_start={self.domain_start}"
            )
        if self._vector_fn is not None:
            return np.asarray(self._vector_fn(ns), dtype=np.float64)
        return np.array([self.fn(int(n)) for n in ns], dtype=np.float64)

    def __repr__(self):
        return f"RealSequence({self.label or self.fn!r}, start={self.domain_start})"


class IntegerSequence:
    """A deterministic evaluable map to Z with exact integer values."""

    def __init__(
        self,
        fn: Callable[[int], int],
        domain_start: int = 1,
        label: str = "",
        vector_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        self.fn = fn
        self.domain_start = domain_start
        self.label = label
        self._vector_fn = vector_fn

    def __call__(self, n: int) -> int:
        if n < self.domain_start:
            raise DomainError(
                f"{self.label or 'sequence'} evaluated at n={n} < domain_start={self.domain_start}"
            )
        return int(self.fn(n))

    def values(self, ns: np.ndarray) -> np.ndarray:
        """Evaluate on an array of indices; int64 output (values must fit)."""
        ns = np.asarray(ns)
        if ns.size and int(ns.min()) < self.domain_start:
            raise DomainError(
                f"{self.label or 'sequence'} evaluated below domain_start={self.domain_start}"
            )
        if self._vector_fn is not None:
            return np.asarray(self._vector_fn(ns), dtype=np.int64)
        return np.array([self.fn(int(n)) for n in ns], dtype=np.int64)

    def __repr__(self):
        return f"IntegerSequence({self.label or self.fn!r}, start={self.domain_start})"


def delta(f: RealSequence, order: int = 1) -> RealSequence:
    """h-th forward difference of f, computed as the alternating binomial sum.

    delta(f, 0) is f itself; the result keeps f's domain_start (evaluating
    D^h f at n reads f at n..n+h).

    When the base carries a floor/fraction split (exact integer floors plus
    an accurately computed fractional part), the integer and fractional
    components are differenced separately: the large integer parts cancel
    exactly and the float work happens on O(1) fractional values, so
    high-order differences stay accurate far beyond the point where plain
    float subtraction is pure cancellation noise.
    """
    if order < 0:
        raise ValueError(f"difference order must be >= 0, got {order}")
    if order == 0:
        return f
    row = binomial_row(order)
    signs = [(-1) ** (order - i) for i in range(order + 1)]
    coeffs = [s * c for s, c in zip(signs, row)]
    label = f"delta^{order}({f.label})" if f.label else f"delta^{order}"

    split_fn = getattr(f, "floor_frac_fn", None)
    split_vector_fn = getattr(f, "floor_frac_vector_fn", None)
    if split_fn is not None and split_vector_fn is not None:

        def fn(n: int) -> float:
            parts = [split_fn(n + i) for i in range(order + 1)]
            int_part = sum(c * p[0] for c, p in zip(coeffs, parts))
            frac_part = math.fsum(c * p[1] for c, p in zip(coeffs, parts))
            return float(int_part) + frac_part

        def vector_fn(ns: np.ndarray) -> np.ndarray:
            ns = np.asarray(ns, dtype=np.int64)
            columns = [split_vector_fn(ns + i) for i in range(order + 1)]
            peak = max(float(np.max(np.abs(g))) if g.size else 0.0 for g, _ in columns)
            if peak * 2.0**order < 2.0**62:
                ints = coeffs[0] * columns[0][0]
                for i in range(1, order + 1):
                    ints = ints + coeffs[i] * columns[i][0]
                ints = ints.astype(np.float64)
            else:
                # exact big-int cancellation, element by element
                ints = np.array(
                    [
                        float(sum(coeffs[i] * int(columns[i][0][j]) for i in range(order + 1)))
                        for j in range(len(ns))
                    ]
                )
            fracs = coeffs[0] * columns[0][1]
            for i in range(1, order + 1):
                fracs = fracs + coeffs[i] * columns[i][1]
            return ints + fracs

        return RealSequence(fn, domain_start=f.domain_start, label=label, vector_fn=vector_fn)

    def fn(n: int) -> float:
        return math.fsum(c * f(n + i) for i, c in enumerate(coeffs))

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        acc = coeffs[0] * f.values(ns)
        for i in range(1, order + 1):
            acc += coeffs[i] * f.values(ns + i)
        return acc

    return RealSequence(
        fn,
        domain_start=f.domain_start,
        label=label,
        vector_fn=vector_fn,
    )


def delta_integer(g: IntegerSequence, order: int = 1) -> IntegerSequence:
    """h-th forward difference of an integer sequence, exact."""
    if order < 0:
        raise ValueError(f"difference order must be >= 0, got {order}")
    if order == 0:
        return g
    row = binomial_row(order)
    coeffs = [(-1) ** (order - i) * c for i, c in enumerate(row)]

    def fn(n: int) -> int:
        return sum(c * g(n + i) for i, c in enumerate(coeffs))

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        acc = coeffs[0] * g.values(ns)
        for i in range(1, order + 1):
            acc = acc + coeffs[i] * g.values(ns + i)
        return acc

    return IntegerSequence(
        fn,
        domain_start=g.domain_start,
        label=f"delta^{order}({g.label})" if g.label else f"delta^{order}",
        vector_fn=vector_fn,
    )


def newton_shift(f: RealSequence, h: int, n: int) -> float:
    """f(n+h) reconstructed from differences at n: sum of C(h,i) * D^i f(n)."""
    row = binomial_row(h)
    return math.fsum(row[i] * delta(f, i)(n) for i in range(h + 1))


def reverse_difference(f: RealSequence, h: int, n: int) -> float:
    """D^h f(n) as the alternating sum of shifted values f(n..n+h).

    Shares delta's evaluation (the same alternating sum, with the
    floor/fraction split when the base provides one).
    """
    binomial_row(h)
    return delta(f, h)(n)


@dataclass(frozen=True)
class DeltaPolynomial:
    """Integer polynomial p applied to the forward-difference operator.

    coefficients = (a_0, ..., a_d) with a_d != 0 represents
    p(D) f = a_0 f + a_1 Df + ... + a_d D^d f.
    """

    coefficients: tuple[int, ...]

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("coefficient vector must be non-empty")
        coeffs = tuple(int(c) for c in self.coefficients)
        if not any(coeffs):
            raise ValueError("polynomial must be nonzero")
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def shift_coefficients(self) -> dict[int, int]:
        """Rewrite p(D) in the shift basis: p(D) = sum_t c_t E^t with Ef(n) = f(n+1).

        Exact integer change of basis via D = E - 1, so
        c_t = sum_j a_j * C(j, t) * (-1)^(j-t).
        """
        d = self.degree
        out: dict[int, int] = {}
        for t in range(d + 1):
            c = sum(
                self.coefficients[j] * math.comb(j, t) * (-1) ** (j - t)
                for j in range(t, d + 1)
            )
            if c:
                out[t] = c
        if not out:
            out[0] = 0
        return out

    @classmethod
    def shift_power(cls, i: int) -> "DeltaPolynomial":
        """(1 + x)^i, so that p(D) f(n) = f(n+i)."""
        if i < 0:
            raise ValueError("shift power must be >= 0")
        return cls(tuple(math.comb(i, j) for j in range(i + 1)))

    def __str__(self):
        terms = []
        for j, a in enumerate(self.coefficients):
            if a == 0:
                continue
            terms.append(f"{a}" if j == 0 else f"{a}*D^{j}")
        return " + ".join(terms) if terms else "0"


class ShiftCombination(RealSequence):
    """Integer combination sum_t c_t f(n + t) of shifts of a base sequence.

    This is the shift-basis form of p(D) f; keeping the base and the exact
    integer coefficients lets floor_sequence take exact-floor routes.
    """

    def __init__(self, base: RealSequence, shift_coeffs: dict[int, int], label: str = ""):
        self.base = base
        self.shift_coeffs = dict(sorted(shift_coeffs.items()))

        def fn(n: int) -> float:
            return math.fsum(c * base(n + t) for t, c in self.shift_coeffs.items())

        def vector_fn(ns: np.ndarray) -> np.ndarray:
            acc = np.zeros(len(ns), dtype=np.float64)
            for t, c in self.shift_coeffs.items():
                acc += c * base.values(ns + t)
            return acc

        super().__init__(fn, domain_start=base.domain_start, label=label, vector_fn=vector_fn)


def apply_delta_polynomial(p: DeltaPolynomial, f: RealSequence) -> RealSequence:
    """Lazy sequence p(D) f = sum a_i D^i f.

    Evaluated through the exact shift-basis rewrite (same function, fewer
    cancellations, and it preserves access to exact floors of the base).
    """
    label = f"({p})({f.label})" if f.label else f"p(D)f"
    return ShiftCombination(f, p.shift_coefficients(), label=label)


def _float_floor(x: float, what: str) -> int:
    if not math.isfinite(x):
        raise ValueError(f"{what}: non-finite value {x}")
    if abs(x) >= FLOAT_EXACT_INT_LIMIT:
        raise OverflowError(
            f"{what}: |{x}| at or beyond 2^53; floor not reliable in float arithmetic"
        )
    return math.floor(x)


def floor_sequence(f: RealSequence) -> IntegerSequence:
    """g(n) = greatest integer <= f(n).

    Uses the sequence's exact-floor hook when present (no floats); shift
    combinations of a base with an exact combination-floor hook are floored
    exactly as well.  The float fallback refuses values at or beyond 2^53.
    """
    if f.floor_fn is not None:
        return IntegerSequence(
            f.floor_fn,
            domain_start=f.domain_start,
            label=f"floor({f.label})",
            vector_fn=f.floor_vector_fn,
        )
    if isinstance(f, ShiftCombination):
        combo_floor = getattr(f.base, "floor_of_combination", None)
        if combo_floor is not None:
            coeffs = f.shift_coeffs
            return IntegerSequence(
                lambda n: combo_floor(coeffs, n),
                domain_start=f.domain_start,
                label=f"floor({f.label})",
            )

    def fn(n: int) -> int:
        return _float_floor(f(n), f.label or "floor")

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        xs = f.values(ns)
        if np.any(~np.isfinite(xs)):
            raise ValueError(f"{f.label or 'floor'}: non-finite values in range")
        if np.any(np.abs(xs) >= FLOAT_EXACT_INT_LIMIT):
            raise OverflowError(
                f"{f.label or 'floor'}: values at or beyond 2^53; floor not reliable"
            )
        return np.floor(xs).astype(np.int64)

    return IntegerSequence(
        fn, domain_start=f.domain_start, label=f"floor({f.label})", vector_fn=vector_fn
    )


def _fraction_frac(q: Fraction) -> Fraction:
    return q - (q.numerator // q.denominator)


def delta_floor_identity(f: RealSequence, h: int, n: int) -> int:
    """Evaluate D^h floor(f) at n through the fractional-part identity and cross-check.

    The right-hand side
        D^h f(n) - sum_t C(h,t) (-1)^(h-t) { sum_s C(t,s) D^s f(n) }
    is computed in exact Fraction arithmetic over the sampled float values
    f(n..n+h), rounded to the nearest integer, and asserted equal to the
    directly computed D^h floor(f)(n).  The distance bound
    |D^h g(n) - D^h f(n)| < 2^h is asserted as well.

    Raises BoundaryAmbiguityError when any sampled fractional part lies
    within 1e-9 of an integer without being exactly integral, and
    NumericalConsistencyError when the two routes disagree (float
    contamination near a floor boundary).
    """
    if h < 1:
        raise ValueError(f"difference order must be >= 1, got {h}")
    row_h = binomial_row(h)

    xs = [f(n + t) for t in range(h + 1)]
    for t, x in enumerate(xs):
        # the ambiguity band scales with the float spacing at |x|: at large
        # magnitudes a double can sit several ulp on the wrong side of an
        # integer (or exactly on one), so a fixed 1e-9 band would miss
        # genuine contamination
        spacing = math.ulp(abs(x))
        band = max(BOUNDARY_TOL, 8.0 * spacing)
        frac = x - math.floor(x)
        if frac == 0.0:
            ambiguous = spacing > BOUNDARY_TOL
        else:
            ambiguous = frac < band or frac > 1.0 - band
        if ambiguous:
            raise BoundaryAmbiguityError(
                f"fractional part of f({n + t}) = {x!r} is within {band} of an "
                f"integer; floor cannot be trusted in float arithmetic"
            )

    exact = [Fraction(x) for x in xs]
    diffs = [
        sum(
            (-1) ** (s - i) * math.comb(s, i) * exact[i]
            for i in range(s + 1)
        )
        for s in range(h + 1)
    ]
    inner = [
        sum(math.comb(t, s) * diffs[s] for s in range(t + 1)) for t in range(h + 1)
    ]
    rhs = diffs[h] - sum(
        row_h[t] * (-1) ** (h - t) * _fraction_frac(inner[t]) for t in range(h + 1)
    )

    value = round(rhs)
    if abs(rhs - value) > ROUNDING_GUARD:
        raise NumericalConsistencyError(
            f"identity value {float(rhs)!r} is not within {ROUNDING_GUARD} of an integer"
        )

    g = floor_sequence(f)
    direct = sum((-1) ** (h - i) * row_h[i] * g(n + i) for i in range(h + 1))
    if abs(rhs - direct) > ROUNDING_GUARD:
        raise NumericalConsistencyError(
            f"identity route gives {float(rhs)!r} but direct floor differences give "
            f"{direct}; float contamination near a floor boundary at n={n}, h={h}"
        )

    if not abs(Fraction(direct) - diffs[h]) < 2**h:
        raise NumericalConsistencyError(
            f"|D^{h} g({n}) - D^{h} f({n})| = {float(abs(Fraction(direct) - diffs[h]))} "
            f"violates the strict bound 2^{h}"
        )
    return direct
