"""Concrete function families, class-membership scans, and family bookkeeping.

The catalog generates the non-polynomial growth functions the rest of the
package averages along: fractional powers b*n^c, power-log products
b*n^c*log^r(n), slowly oscillating n^c*(cos(log^r n)+2), and plain log
powers.  Each carries a declared level L, meaning the (L+1)-th forward
difference is expected to tend to zero monotonically with divergent sum;
`verify_class_membership` checks that numerically up to a horizon and
reports honestly rather than proving anything.

The second half implements the combinatorics of rational combinations
sum_i c_i D^i f (+ decaying perturbation): degree and leading coefficient,
per-degree class counting, and the correlation transform whose strict rank
decrease drives induction over such families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .differences import RealSequence, delta
from .errors import SpecStringError
from .exactroots import (
    floor_rational_power_combination,
    root_floor_fraction,
    sqrt_floor_fraction_vector,
)

NAMED_CONSTANTS: dict[str, float] = {
    "sqrt2": 1.4142135623730951,   # sqrt(2)
    "golden": 1.618033988749895,   # (1 + sqrt(5)) / 2
    "e": 2.718281828459045,
    "pi": 3.141592653589793,
}

RealParam = Union[Fraction, float]


def parse_real_param(text: str) -> RealParam:
    """Parse a parameter: 'p/q' or decimal -> exact Fraction, named constant -> float."""
    text = text.strip()
    if text in NAMED_CONSTANTS:
        return NAMED_CONSTANTS[text]
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot parse real parameter {text!r}")


def _is_integer(x: RealParam) -> bool:
    if isinstance(x, Fraction):
        return x.denominator == 1
    return float(x) == int(x)


def _ceil(x: RealParam) -> int:
    return math.ceil(x)


class CatalogFunction(RealSequence):
    """A catalog-generated sequence with declared class level.

    declared_level = L means the function is expected to lie in class L+1,
    i.e. its (L+1)-th difference tends monotonically to 0 with divergent sum.
    """

    def __init__(self, family: str, params: dict, declared_level: int, **kw):
        self.family = family
        self.params = dict(params)
        self.declared_level = int(declared_level)
        super().__init__(**kw)

    def same_function(self, other: "CatalogFunction") -> bool:
        return (
            self.family == other.family
            and self.params == other.params
            and self.declared_level == other.declared_level
        )

    def spec_string(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.family}:{inner}" if inner else self.family

    def __repr__(self):
        return f"CatalogFunction({self.spec_string()}, level={self.declared_level})"


def _power_family(b: RealParam, c: RealParam) -> CatalogFunction:
    if b == 0:
        raise ValueError("power family requires b != 0")
    if not (c > 0):
        raise ValueError("power family requires c > 0")
    if _is_integer(c):
        raise ValueError(
            "power family excludes integer exponents (polynomial case)"
        )
    bf, cf = float(b), float(c)

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        return bf * np.power(ns.astype(np.float64), cf)

    kw: dict = {}
    exact_mode = isinstance(b, Fraction) and isinstance(c, Fraction)
    if exact_mode:
        p, q = c.numerator, c.denominator
        bn, bd = b.numerator, b.denominator

        def floor_frac_fn(n: int) -> tuple[int, float]:
            r, fr = root_floor_fraction(abs(bn) ** q * n**p, q)
            if bn > 0:
                fl = r // bd
                return fl, ((r - fl * bd) + fr) / bd
            if fr == 0.0 and r % bd == 0:
                return -(r // bd), 0.0
            fl = -(r // bd + 1)
            return fl, min(((-r - fl * bd) - fr) / bd, math.nextafter(1.0, 0.0))

        def floor_fn(n: int) -> int:
            return floor_frac_fn(n)[0]

        fast_sqrt = q == 2 and bn == 1 and bd == 1

        def floor_frac_vector_fn(ns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            ns = np.asarray(ns, dtype=np.int64)
            # radicand and (root+1)^2 must both stay inside signed int64
            if fast_sqrt and ns.size and float(ns.max()) ** p < 9.0e18:
                return sqrt_floor_fraction_vector(ns**p)
            floors = np.empty(len(ns), dtype=np.int64)
            fracs = np.empty(len(ns), dtype=np.float64)
            for i, n in enumerate(ns):
                floors[i], fracs[i] = floor_frac_fn(int(n))
            return floors, fracs

        def floor_vector_fn(ns: np.ndarray) -> np.ndarray:
            return floor_frac_vector_fn(ns)[0]

        def floor_of_combination(coeffs: dict[int, int], n: int) -> int:
            return floor_rational_power_combination(coeffs, n, b, p, q)

        kw["floor_fn"] = floor_fn
        kw["floor_vector_fn"] = floor_vector_fn
    label = f"{b}*n^{c}"
    fn = lambda n: float(vector_fn(np.array([n], dtype=np.float64))[0])
    cat = CatalogFunction(
        "power",
        {"b": b, "c": c},
        declared_level=_ceil(c) - 1,
        fn=fn,
        label=label,
        vector_fn=vector_fn,
        **kw,
    )
    if exact_mode:
        cat.floor_of_combination = floor_of_combination
        cat.floor_frac_fn = floor_frac_fn
        cat.floor_frac_vector_fn = floor_frac_vector_fn
    return cat


def _power_log_family(b: RealParam, c: RealParam, r: RealParam) -> CatalogFunction:
    if b == 0:
        raise ValueError("power_log family requires b != 0")
    if not (c > 0):
        raise ValueError("power_log family requires c > 0")
    if _is_integer(c):
        raise ValueError("power_log family excludes integer exponents")
    if r < 0:
        raise ValueError("power_log family requires r >= 0")
    bf, cf, rf = float(b), float(c), float(r)

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        xs = ns.astype(np.float64)
        return bf * np.power(xs, cf) * np.power(np.log(xs), rf)

    fn = lambda n: float(vector_fn(np.array([n], dtype=np.float64))[0])
    return CatalogFunction(
        "power_log",
        {"b": b, "c": c, "r": r},
        declared_level=_ceil(c) - 1,
        fn=fn,
        label=f"{b}*n^{c}*log^{r}(n)",
        vector_fn=vector_fn,
    )


def _oscillating_family(c: RealParam, r: RealParam) -> CatalogFunction:
    if not (c > 0):
        raise ValueError("oscillating family requires c > 0")
    if _is_integer(c):
        # at integer c the polynomial leading term of the (c+1)-th derivative
        # vanishes and the oscillatory correction dominates, so the required
        # eventual monotonicity fails
        raise ValueError("oscillating family excludes integer exponents")
    if not (0 < r < 1):
        raise ValueError("oscillating family requires 0 < r < 1")
    cf, rf = float(c), float(r)

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        xs = ns.astype(np.float64)
        return np.power(xs, cf) * (np.cos(np.power(np.log(xs), rf)) + 2.0)

    fn = lambda n: float(vector_fn(np.array([n], dtype=np.float64))[0])
    return CatalogFunction(
        "oscillating",
        {"c": c, "r": r},
        declared_level=_ceil(c) - 1,
        fn=fn,
        label=f"n^{c}*(cos(log^{r}(n))+2)",
        vector_fn=vector_fn,
    )


def _log_power_family(r: RealParam) -> CatalogFunction:
    if not (r > 0):
        raise ValueError("log_power family requires r > 0")
    rf = float(r)

    def vector_fn(ns: np.ndarray) -> np.ndarray:
        return np.power(np.log(ns.astype(np.float64)), rf)

    fn = lambda n: float(vector_fn(np.array([n], dtype=np.float64))[0])
    return CatalogFunction(
        "log_power",
        {"r": r},
        declared_level=0,
        fn=fn,
        label=f"log^{r}(n)",
        vector_fn=vector_fn,
    )


def make_catalog_function(family: str, **params) -> CatalogFunction:
    """Build a catalog function; parameter constraints are enforced per family."""
    if family == "power":
        return _power_family(params["b"], params["c"])
    if family == "power_log":
        return _power_log_family(params["b"], params["c"], params.get("r", Fraction(0)))
    if family == "oscillating":
        return _oscillating_family(params["c"], params["r"])
    if family == "log_power":
        return _log_power_family(params["r"])
    if family == "custom":
        return CatalogFunction(
            "custom",
            {"label": params.get("label", "custom")},
            declared_level=params["declared_level"],
            fn=params["fn"],
            domain_start=params.get("domain_start", 1),
            label=params.get("label", "custom"),
            vector_fn=params.get("vector_fn"),
        )
    raise ValueError(f"unknown function family {family!r}")


def parse_function_spec(spec: str) -> CatalogFunction:
    """Parse a function spec string such as 'power:b=1,c=1.5'."""
    spec = spec.strip()
    family, _, rest = spec.partition(":")
    family = family.strip()
    params: dict[str, RealParam] = {}
    if rest:
        for item in rest.split(","):
            if not item.strip():
                continue
            key, sep, value = item.partition("=")
            if not sep:
                raise SpecStringError("function", f"expected key=value, got {item!r}")
            try:
                params[key.strip()] = parse_real_param(value)
            except ValueError as exc:
                raise SpecStringError("function", str(exc)) from exc
    if family == "custom":
        raise SpecStringError("function", "custom functions are not string-addressable")
    try:
        return make_catalog_function(family, **params)
    except (ValueError, KeyError, TypeError) as exc:
        raise SpecStringError("function", f"{spec!r}: {exc}") from exc


def function_family_registry() -> list[dict]:
    """Stable machine-readable registry of string-addressable families."""
    return [
        {
            "name": "log_power",
            "params": ["r"],
            "constraints": "r > 0; level 0",
        },
        {
            "name": "oscillating",
            "params": ["c", "r"],
            "constraints": "c > 0 not an integer, 0 < r < 1; level ceil(c)-1",
        },
        {
            "name": "power",
            "params": ["b", "c"],
            "constraints": "b != 0, c > 0 not an integer; level ceil(c)-1",
        },
        {
            "name": "power_log",
            "params": ["b", "c", "r"],
            "constraints": "b != 0, c > 0 not an integer, r >= 0; level ceil(c)-1",
        },
    ]


# ---------------------------------------------------------------------------
# class-membership verification


@dataclass
class MembershipReport:
    label: str
    level: int
    horizon: int
    divergence_threshold: float
    monotone_onset: Optional[int]
    terminal_value: float
    partial_sum: float
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "level": self.level,
            "horizon": self.horizon,
            "divergence_threshold": self.divergence_threshold,
            "monotone_onset": self.monotone_onset,
            "terminal_value": self.terminal_value,
            "partial_sum": self.partial_sum,
            "consistent": self.consistent,
        }


def verify_class_membership(
    f: CatalogFunction,
    level: int,
    horizon: int,
    divergence_threshold: float,
    chunk: int = 1 << 18,
) -> MembershipReport:
    """Scan D^(level+1) f up to the horizon for the class-defining behaviour.

    Checks three desk-scale proxies: a monotone tail (within float noise) of
    u = D^(level+1) f, a small terminal |u(horizon)|, and a partial sum of
    |u| exceeding the divergence threshold.  The verdict is "consistent up
    to horizon", never a proof.
    """
    if horizon < 10**3:
        raise ValueError("horizon must be >= 1000")
    # the scan is qualitative by design (monotone within a float-noise floor,
    # small terminal value, divergent partial sum), so it deliberately reads
    # the plain float evaluation rather than the slower exact split
    plain = RealSequence(
        f.fn, domain_start=f.domain_start, label=f.label, vector_fn=f._vector_fn
    )
    u = delta(plain, level + 1)
    start = f.domain_start
    partial = 0.0
    last_up = None     # last index violating "nonincreasing"
    last_down = None   # last index violating "nondecreasing"
    prev_u = None
    prev_scale = None
    terminal = 0.0
    partials = []
    for lo in range(start, horizon + 1, chunk):
        hi = min(lo + chunk, horizon + 1)
        ns = np.arange(lo, hi, dtype=np.int64)
        uv = u.values(ns)
        fv = np.abs(f.values(ns))
        partials.append(float(np.sum(np.abs(uv))))
        # increments of u, with the previous chunk's tail element stitched on
        if prev_u is not None:
            uv_ext = np.concatenate([[prev_u], uv])
            sc_ext = np.concatenate([[prev_scale], fv])
            base = lo - 1
        else:
            uv_ext = uv
            sc_ext = fv
            base = lo
        d = np.diff(uv_ext)
        noise = (2.0 ** (level + 3)) * np.spacing(np.maximum(sc_ext[:-1], sc_ext[1:]))
        up = np.nonzero(d > noise)[0]
        down = np.nonzero(d < -noise)[0]
        if up.size:
            last_up = base + int(up[-1])
        if down.size:
            last_down = base + int(down[-1])
        prev_u = float(uv[-1])
        prev_scale = float(fv[-1])
        terminal = float(abs(uv[-1]))
    partial = math.fsum(partials)

    onset_candidates = []
    for last in (last_up, last_down):
        onset_candidates.append(start if last is None else last + 1)
    onset = min(onset_candidates)
    tail_ok = onset <= start + int(0.9 * (horizon - start))
    consistent = tail_ok and terminal < 0.1 and partial > divergence_threshold
    return MembershipReport(
        label=f.label,
        level=level,
        horizon=horizon,
        divergence_threshold=divergence_threshold,
        monotone_onset=onset if tail_ok else None,
        terminal_value=terminal,
        partial_sum=partial,
        consistent=consistent,
    )


# ---------------------------------------------------------------------------
# rational combinations of derivatives and their induction bookkeeping


@dataclass(frozen=True)
class SFamilyElement:
    """sum_i c_i D^i f + beta with rational c_i not all zero and beta decaying."""

    base: CatalogFunction
    coefficients: tuple[Fraction, ...]
    perturbation: Optional[RealSequence] = None

    def __post_init__(self):
        coeffs = tuple(Fraction(c) for c in self.coefficients)
        expected = self.base.declared_level + 1
        if len(coeffs) != expected:
            raise ValueError(
                f"need {expected} coefficients (c_0..c_{expected - 1}), got {len(coeffs)}"
            )
        if not any(coeffs):
            raise ValueError("coefficients must not all be zero")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def min_index(self) -> int:
        return next(i for i, c in enumerate(self.coefficients) if c != 0)

    @property
    def degree(self) -> int:
        return self.base.declared_level + 1 - self.min_index

    @property
    def leading_coefficient(self) -> Fraction:
        return self.coefficients[self.min_index]

    def equivalent(self, other: "SFamilyElement") -> bool:
        return (
            self.degree == other.degree
            and self.leading_coefficient == other.leading_coefficient
        )

    def as_sequence(self) -> RealSequence:
        base = self.base
        coeffs = self.coefficients
        seqs = [delta(base, i) for i in range(len(coeffs))]
        beta = self.perturbation

        def fn(n: int) -> float:
            val = math.fsum(float(c) * s(n) for c, s in zip(coeffs, seqs) if c)
            if beta is not None:
                val += beta(n)
            return val

        def vector_fn(ns: np.ndarray) -> np.ndarray:
            acc = np.zeros(len(ns), dtype=np.float64)
            for c, s in zip(coeffs, seqs):
                if c:
                    acc += float(c) * s.values(ns)
            if beta is not None:
                acc += beta.values(ns)
            return acc

        return RealSequence(
            fn, domain_start=base.domain_start, label="combination", vector_fn=vector_fn
        )


def sfamily_degree(e: SFamilyElement) -> tuple[int, Fraction]:
    """(degree, leading coefficient); the equivalence-class key."""
    return e.degree, e.leading_coefficient


@dataclass(frozen=True)
class CharacteristicVector:
    """Per-degree counts (m_1, ..., m_L) of equivalence classes in a family."""

    counts: tuple[int, ...]

    def _cmp(self, other: "CharacteristicVector") -> int:
        n = max(len(self.counts), len(other.counts))
        a = self.counts + (0,) * (n - len(self.counts))
        b = other.counts + (0,) * (n - len(other.counts))
        for j in range(n - 1, -1, -1):
            if a[j] != b[j]:
                return -1 if a[j] < b[j] else 1
        return 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0


def characteristic_vector(family: Sequence[SFamilyElement]) -> CharacteristicVector:
    """Count (degree, leading coefficient) classes per degree."""
    if not family:
        return CharacteristicVector(())
    base = family[0].base
    for e in family[1:]:
        if e.base is not base and not e.base.same_function(base):
            raise ValueError("all family elements must share the same base function")
    top = base.declared_level + 1
    classes = {(e.degree, e.leading_coefficient) for e in family}
    counts = [0] * top
    for degree, _ in classes:
        counts[degree - 1] += 1
    return CharacteristicVector(tuple(counts))


def _shift_coefficients(coeffs: tuple[Fraction, ...], m: int) -> tuple[Fraction, ...]:
    """Coefficients of f'(n) = f(n+m) in the D^i basis, truncated at the top level.

    D^j f(n+m) = sum_t C(m,t) D^(j+t) f(n); indices beyond the level are
    decaying for a base in class level+1 and are absorbed by the
    perturbation slot.
    """
    L = len(coeffs)
    out = [Fraction(0)] * L
    for j, c in enumerate(coeffs):
        if not c:
            continue
        for t in range(0, min(m, L - 1 - j) + 1):
            out[j + t] += c * math.comb(m, t)
    return tuple(out)


def vdc_transform(
    family: Sequence[SFamilyElement], pivot: int, m: int = 1
) -> list[SFamilyElement]:
    """Correlation transform: {f_i(.+m) - f_pivot} plus {f_i - f_pivot, i != pivot}.

    Decayed members (all coefficients zero after the subtraction) are
    discarded.  The pivot must have minimal degree in the family, which
    forces the characteristic vector to decrease strictly.
    """
    if not family:
        raise ValueError("family must be non-empty")
    if m < 1:
        raise ValueError("shift m must be >= 1")
    if not 0 <= pivot < len(family):
        raise ValueError("pivot out of range")
    min_degree = min(e.degree for e in family)
    if family[pivot].degree != min_degree:
        raise ValueError(
            f"pivot must select an element of minimal degree {min_degree}, "
            f"got degree {family[pivot].degree}"
        )
    base = family[0].base
    c1 = family[pivot].coefficients
    out: list[SFamilyElement] = []

    def push(coeffs: Iterable[Fraction]):
        coeffs = tuple(coeffs)
        if any(coeffs):
            out.append(SFamilyElement(base, coeffs))

    for e in family:
        shifted = _shift_coefficients(e.coefficients, m)
        push(s - c for s, c in zip(shifted, c1))
    for i, e in enumerate(family):
        if i == pivot:
            continue
        push(a - c for a, c in zip(e.coefficients, c1))
    return out
