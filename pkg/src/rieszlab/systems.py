"""Exactly and approximately computable invertible measure-preserving systems.

Rotations of the d-torus (exact arc arithmetic in dimension 1), finite
cyclic shifts, the skew product (x, y) -> (x + a, y + x) on the 2-torus,
and the 2-step nilpotent quotient of the upper-triangular group law
(x, y, z)(x', y', z') = (x+x', y+y', z+z'+x y') by the integer lattice.
Each system iterates in O(1) through a closed form, for negative powers
too, and supports Monte Carlo estimates of intersection measures for sets
where no exact route exists.

Half-open conventions everywhere: arcs are [l, r) on the unit circle and
boxes are products of [l, r) cells, so translations and intersections never
double-count endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .equidist import ExactReal, as_exact_real
from .catalog import NAMED_CONSTANTS
from .errors import SpecStringError

MAX_SHIFTS = 64
FLOAT_SNAP = 1e-12

Endpoint = Union[Fraction, float]


def _mod1(x: Endpoint) -> Endpoint:
    return x - math.floor(x)


class ArcSet:
    """Finite union of half-open arcs [l, r) on the unit circle.

    Exact mode keeps Fraction endpoints and exact measures; float mode snaps
    endpoints closer than 1e-12 when normalizing.  Arcs are stored sorted,
    disjoint, and non-wrapping (wrapping arcs are split at 1).
    """

    def __init__(self, arcs: Iterable[tuple[Endpoint, Endpoint]], exact: bool = True):
        self.exact = exact
        cleaned = []
        for lo, hi in arcs:
            lo, hi = self._coerce(lo), self._coerce(hi)
            if not (0 <= lo <= 1 and 0 <= hi <= 1):
                raise ValueError(f"arc endpoints must lie in [0, 1], got ({lo}, {hi})")
            if lo < hi:
                cleaned.append((lo, hi))
        self.arcs = self._normalize(cleaned)

    def _coerce(self, x) -> Endpoint:
        if self.exact:
            if isinstance(x, Fraction):
                return x
            if isinstance(x, int):
                return Fraction(x)
            if isinstance(x, str):
                return Fraction(x)
            return Fraction(x)  # exact dyadic value of a float
        return float(x)

    def _normalize(self, arcs):
        arcs = sorted(arcs)
        if not self.exact and arcs:
            snapped = []
            for lo, hi in arcs:
                if snapped and abs(lo - snapped[-1][1]) < FLOAT_SNAP:
                    lo = snapped[-1][1]
                snapped.append((lo, hi))
            arcs = [(lo, hi) for lo, hi in snapped if hi - lo > 0]
        merged: list[tuple[Endpoint, Endpoint]] = []
        for lo, hi in arcs:
            if merged and lo <= merged[-1][1]:
                prev_lo, prev_hi = merged[-1]
                merged[-1] = (prev_lo, max(prev_hi, hi))
            else:
                merged.append((lo, hi))
        return tuple(merged)

    @classmethod
    def from_pairs(cls, pairs, exact: bool = True) -> "ArcSet":
        return cls(pairs, exact=exact)

    @classmethod
    def full(cls, exact: bool = True) -> "ArcSet":
        return cls([(0, 1)], exact=exact)

    @classmethod
    def empty(cls, exact: bool = True) -> "ArcSet":
        return cls([], exact=exact)

    def measure(self) -> Endpoint:
        zero = Fraction(0) if self.exact else 0.0
        return sum((hi - lo for lo, hi in self.arcs), zero)

    def complement(self) -> "ArcSet":
        out = []
        cursor: Endpoint = Fraction(0) if self.exact else 0.0
        for lo, hi in self.arcs:
            if lo > cursor:
                out.append((cursor, lo))
            cursor = hi
        one = Fraction(1) if self.exact else 1.0
        if cursor < one:
            out.append((cursor, one))
        return ArcSet(out, exact=self.exact)

    def intersect(self, other: "ArcSet") -> "ArcSet":
        out = []
        for lo1, hi1 in self.arcs:
            for lo2, hi2 in other.arcs:
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if lo < hi:
                    out.append((lo, hi))
        return ArcSet(out, exact=self.exact and other.exact)

    def translate(self, s) -> "ArcSet":
        """The set {x + s mod 1 : x in self}.

        Translation by an exact rational keeps exact mode; translation by a
        float demotes the result to float mode.
        """
        if self.exact and isinstance(s, (Fraction, int, str)):
            s = _mod1(Fraction(s))
            arcs = self.arcs
            exact = True
            zero, one = Fraction(0), Fraction(1)
        else:
            s = _mod1(float(s))
            arcs = [(float(lo), float(hi)) for lo, hi in self.arcs]
            exact = False
            zero, one = 0.0, 1.0
        out = []
        for lo, hi in arcs:
            lo2, hi2 = lo + s, hi + s
            if hi2 <= one:
                out.append((lo2, hi2))
            elif lo2 >= one:
                out.append((lo2 - one, hi2 - one))
            else:
                out.append((lo2, one))
                out.append((zero, hi2 - one))
        return ArcSet(out, exact=exact)

    def indicator(self, points: np.ndarray) -> np.ndarray:
        x = np.asarray(points, dtype=np.float64)
        if x.ndim == 2:
            x = x[:, 0]
        mask = np.zeros(len(x), dtype=bool)
        for lo, hi in self.arcs:
            mask |= (x >= float(lo)) & (x < float(hi))
        return mask

    def __eq__(self, other):
        return isinstance(other, ArcSet) and self.arcs == other.arcs

    def __repr__(self):
        arcs = ", ".join(f"[{lo}, {hi})" for lo, hi in self.arcs)
        return f"ArcSet({arcs or 'empty'})"


def arc_intersection_measure(A: ArcSet, shifts: Sequence) -> Endpoint:
    """Measure of A intersect (A - s_1) intersect ... intersect (A - s_k), exact in exact mode."""
    if len(shifts) > MAX_SHIFTS:
        raise ValueError(f"at most {MAX_SHIFTS} shifts supported, got {len(shifts)}")
    result = A
    for s in shifts:
        result = result.intersect(A.translate(-s))
        if not result.arcs:
            break
    return result.measure()


def arc_autocorrelation(A: ArcSet, shifts: np.ndarray) -> np.ndarray:
    """mu(A intersect (A - s)) for an array of float shifts, vectorized."""
    s = np.mod(np.asarray(shifts, dtype=np.float64), 1.0)
    out = np.zeros(len(s), dtype=np.float64)
    arcs = [(float(lo), float(hi)) for lo, hi in A.arcs]
    for lo1, hi1 in arcs:
        for lo2, hi2 in arcs:
            # translate [lo2, hi2) by -s, allowing wraps w
            for w in (-1.0, 0.0, 1.0):
                lo = np.maximum(lo1, lo2 - s + w)
                hi = np.minimum(hi1, hi2 - s + w)
                out += np.maximum(0.0, hi - lo)
    return out


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class RotationSystem:
    """Translation x -> x + alpha on the d-torus with Lebesgue measure."""

    alpha: tuple[ExactReal, ...]

    @classmethod
    def from_values(cls, values) -> "RotationSystem":
        vals = values if isinstance(values, (tuple, list)) else (values,)
        return cls(tuple(as_exact_real(v) for v in vals))

    @property
    def dimension(self) -> int:
        return len(self.alpha)

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Fraction) for a in self.alpha)

    def shift_value(self, m: int, coord: int = 0):
        """m * alpha_coord mod 1, exact Fraction in rational mode."""
        a = self.alpha[coord]
        if isinstance(a, Fraction):
            return (m * a) % 1
        return math.fmod(m * float(a), 1.0) % 1.0

    def iterate_point(self, point, m: int):
        pt = point if isinstance(point, (tuple, list)) else (point,)
        out = []
        for x, a in zip(pt, self.alpha):
            if isinstance(a, Fraction) and isinstance(x, (Fraction, int)):
                out.append((Fraction(x) + m * a) % 1)
            else:
                out.append((float(x) + m * float(a)) % 1.0)
        return tuple(out)

    def iterate_array(self, points: np.ndarray, m: int) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        shift = np.array([float(self.shift_value(m, i)) for i in range(self.dimension)])
        return np.mod(pts + shift, 1.0)


@dataclass(frozen=True)
class CyclicSystem:
    """Finite rotation x -> x + step on Z/modulus with counting measure."""

    modulus: int
    step: int = 1

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")

    @property
    def dimension(self) -> int:
        return 1

    def iterate_point(self, point: int, m: int) -> int:
        return (int(point) + m * self.step) % self.modulus

    def set_measure(self, subset: frozenset[int]) -> Fraction:
        return Fraction(len(subset), self.modulus)

    def intersection_measure(self, subset: frozenset[int], ms: Sequence[int]) -> Fraction:
        hit = 0
        for x in subset:
            if all((x + m * self.step) % self.modulus in subset for m in ms):
                hit += 1
        return Fraction(hit, self.modulus)


@dataclass(frozen=True)
class SkewProductSystem:
    """(x, y) -> (x + alpha, y + x) on the 2-torus; preserves Lebesgue measure."""

    alpha: ExactReal

    @classmethod
    def from_value(cls, value) -> "SkewProductSystem":
        return cls(as_exact_real(value))

    @property
    def dimension(self) -> int:
        return 2

    @property
    def exact(self) -> bool:
        return isinstance(self.alpha, Fraction)

    def iterate_point(self, point, m: int):
        x, y = point
        binom = m * (m - 1) // 2 if isinstance(m, int) else m * (m - 1) / 2
        if self.exact and isinstance(x, (Fraction, int)) and isinstance(y, (Fraction, int)):
            a = self.alpha
            return ((Fraction(x) + m * a) % 1, (Fraction(y) + m * Fraction(x) + binom * a) % 1)
        a = float(self.alpha)
        return ((float(x) + m * a) % 1.0, (float(y) + m * float(x) + binom * a) % 1.0)

    def iterate_array(self, points: np.ndarray, m: int) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        a = float(self.alpha)
        binom = m * (m - 1) / 2.0
        x = pts[:, 0]
        y = pts[:, 1]
        return np.stack(
            [np.mod(x + m * a, 1.0), np.mod(y + m * x + binom * a, 1.0)], axis=1
        )


GroupElement = tuple  # (x, y, z) with Fraction or float entries


@dataclass(frozen=True)
class HeisenbergSystem:
    """Left translation by b on the quotient of the 2-step group law by Z^3.

    Group law (x, y, z)(x', y', z') = (x + x', y + y', z + z' + x y');
    powers close up as b^t = (t a, t b, t c + C(t, 2) a b) for any real t,
    so iteration is O(1).  Haar measure in these coordinates is Lebesgue on
    the fundamental domain [0, 1)^3; indicator sets are box unions.
    """

    translation: tuple[ExactReal, ExactReal, ExactReal]

    @classmethod
    def from_values(cls, a, b, c) -> "HeisenbergSystem":
        return cls((as_exact_real(a), as_exact_real(b), as_exact_real(c)))

    @property
    def dimension(self) -> int:
        return 3

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.translation)

    @staticmethod
    def multiply(g1: GroupElement, g2: GroupElement) -> GroupElement:
        x1, y1, z1 = g1
        x2, y2, z2 = g2
        return (x1 + x2, y1 + y2, z1 + z2 + x1 * y2)

    @staticmethod
    def inverse(g: GroupElement) -> GroupElement:
        x, y, z = g
        return (-x, -y, -z + x * y)

    def power(self, t) -> GroupElement:
        """b^t via the closed form; exact for integer t in rational mode."""
        a, b, c = self.translation
        if isinstance(t, int) and self.exact:
            binom = Fraction(t * (t - 1), 2)
            return (t * a, t * b, t * c + binom * (a * b))
        a, b, c = float(a), float(b), float(c)
        binom = t * (t - 1) / 2.0
        return (t * a, t * b, t * c + binom * a * b)

    def power_by_iteration(self, m: int) -> GroupElement:
        """m-fold group multiplication (oracle for the closed form)."""
        if m == 0:
            zero = Fraction(0) if self.exact else 0.0
            return (zero, zero, zero)
        base = self.translation if self.exact else tuple(float(v) for v in self.translation)
        if m < 0:
            base = self.inverse(base)
            m = -m
        acc = base
        for _ in range(m - 1):
            acc = self.multiply(acc, base)
        return acc

    @staticmethod
    def reduce(g: GroupElement) -> GroupElement:
        """Right-multiply by a lattice element to land in [0, 1)^3."""
        x, y, z = g
        q = -math.floor(y)
        z2 = z + x * q
        return (x - math.floor(x), y + q, z2 - math.floor(z2))

    def iterate_point(self, point: GroupElement, m) -> GroupElement:
        return self.reduce(self.multiply(self.power(m), tuple(point)))

    def iterate_array(self, points: np.ndarray, m: int) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        A, B, C = (float(v) for v in self.power(m))
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        nx = A + x
        ny = B + y
        nz = C + z + A * y
        q = -np.floor(ny)
        nz = nz + nx * q
        return np.stack(
            [np.mod(nx, 1.0), ny + q, nz - np.floor(nz)], axis=1
        )


System = Union[RotationSystem, CyclicSystem, SkewProductSystem, HeisenbergSystem]


class BoxSet:
    """Union of half-open boxes, one (lo, hi) pair per dimension per box."""

    def __init__(self, boxes: Sequence[Sequence[tuple[float, float]]]):
        self.boxes = [
            [(float(lo), float(hi)) for lo, hi in box] for box in boxes
        ]
        for box in self.boxes:
            for lo, hi in box:
                if not (0.0 <= lo < hi <= 1.0):
                    raise ValueError(f"box cell ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")

    @property
    def dimension(self) -> int:
        return len(self.boxes[0]) if self.boxes else 0

    def measure(self) -> float:
        total = 0.0
        for box in self.boxes:
            vol = 1.0
            for lo, hi in box:
                vol *= hi - lo
            total += vol
        return total

    def indicator(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        mask = np.zeros(len(pts), dtype=bool)
        for box in self.boxes:
            inside = np.ones(len(pts), dtype=bool)
            for dim, (lo, hi) in enumerate(box):
                inside &= (pts[:, dim] >= lo) & (pts[:, dim] < hi)
            mask |= inside
        return mask


@dataclass
class MeasureEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
        }


def measure_estimate(
    system: System,
    set_indicator,
    shifts: Sequence[int],
    samples: int,
    seed: int,
) -> MeasureEstimate:
    """Monte Carlo estimate of mu(A cap T^(m_1) A cap ...), deterministic given the seed.

    `set_indicator` is a vectorized membership test on fundamental-domain
    points; `shifts` are the iteration exponents applied to the sampled
    points (use negative values for preimages).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    indicator = getattr(set_indicator, "indicator", set_indicator)
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, system.dimension))
    mask = np.asarray(indicator(pts), dtype=bool)
    for m in shifts:
        mask &= np.asarray(indicator(system.iterate_array(pts, int(m))), dtype=bool)
    p = float(np.mean(mask))
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return MeasureEstimate(estimate=p, stderr=stderr, samples=samples, seed=seed)


# ---------------------------------------------------------------------------
# spec strings


def _parse_kv(rest: str, field: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in rest.split(","):
        if not item.strip():
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise SpecStringError(field, f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _parse_exact_list(text: str, field: str) -> list[ExactReal]:
    out = []
    for part in text.split(";"):
        part = part.strip()
        try:
            out.append(as_exact_real(part))
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecStringError(field, f"bad value {part!r}: {exc}") from exc
    return out


def parse_system_spec(spec: str) -> System:
    """Parse 'rotation:alpha=sqrt2', 'cyclic:q=7,step=2', 'skew:alpha=1/4',
    'heisenberg:a=1/3,b=1/5,c=0'; coordinates separated by ';'."""
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    kv = _parse_kv(rest, "system")
    try:
        if kind == "rotation":
            alpha = _parse_exact_list(kv["alpha"], "system")
            if "d" in kv and int(kv["d"]) != len(alpha):
                raise SpecStringError(
                    "system", f"d={kv['d']} but alpha has {len(alpha)} coordinates"
                )
            return RotationSystem(tuple(alpha))
        if kind == "cyclic":
            return CyclicSystem(modulus=int(kv["q"]), step=int(kv.get("step", 1)))
        if kind == "skew":
            return SkewProductSystem(_parse_exact_list(kv["alpha"], "system")[0])
        if kind == "heisenberg":
            a, b, c = (
                _parse_exact_list(kv[key], "system")[0] for key in ("a", "b", "c")
            )
            return HeisenbergSystem((a, b, c))
    except KeyError as exc:
        raise SpecStringError("system", f"{spec!r} missing parameter {exc}") from exc
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, SpecStringError):
            raise
        raise SpecStringError("system", f"{spec!r}: {exc}") from exc
    raise SpecStringError("system", f"unknown system kind {kind!r}")


def parse_set_spec(spec: str, exact: bool = True):
    """Parse 'arc:0,0.3', 'arcs:0,0.3;0.5,0.7', 'box:0,0.5;0,0.5', 'elements:0,1,3', 'full'."""
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    try:
        if kind == "full":
            return ArcSet.full(exact=exact)
        if kind in ("arc", "arcs"):
            pairs = []
            for part in rest.split(";"):
                lo, _, hi = part.partition(",")
                pairs.append((Fraction(lo.strip()), Fraction(hi.strip())))
            return ArcSet(pairs, exact=exact)
        if kind == "box":
            cells = []
            for part in rest.split(";"):
                lo, _, hi = part.partition(",")
                cells.append((float(Fraction(lo.strip())), float(Fraction(hi.strip()))))
            return BoxSet([cells])
        if kind == "elements":
            return frozenset(int(x) for x in rest.split(",") if x.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecStringError("set", f"{spec!r}: {exc}") from exc
    raise SpecStringError("set", f"unknown set kind {kind!r}")


def system_registry() -> list[dict]:
    """Stable machine-readable registry of string-addressable systems."""
    return [
        {"name": "cyclic", "params": ["q", "step"], "constraints": "q >= 1"},
        {
            "name": "heisenberg",
            "params": ["a", "b", "c"],
            "constraints": "rationals or named constants",
        },
        {
            "name": "rotation",
            "params": ["alpha"],
            "constraints": "';'-separated coordinates, rationals or named constants",
        },
        {"name": "skew", "params": ["alpha"], "constraints": "rational or named constant"},
    ]


def named_constant_registry() -> list[dict]:
    return [
        {"name": name, "value": value}
        for name, value in sorted(NAMED_CONSTANTS.items())
    ]
