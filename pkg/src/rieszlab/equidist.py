"""Equidistribution testing along weighted window averages.

Character averages decide equidistribution: a torus-valued sequence is well
distributed with respect to a target Haar measure exactly when every
character's window average converges to that character's integral (1 on the
annihilator, 0 off it).  This module estimates those averages, evaluates
the explicit correlation-sum certificate that bounds a normalized
exponential sum, and integrates characters (and fractional-part phases)
over closed subgroups of the 2-torus.

Rationality of slopes and generator coordinates is always a declaration
carried by the value, never inferred from floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .averaging import WeightScheme, WindowSchedule, riesz_mean
from .catalog import NAMED_CONSTANTS, CatalogFunction
from .differences import delta, delta_integer, floor_sequence

TWO_PI = 2.0 * math.pi


def phase(theta: np.ndarray) -> np.ndarray:
    """exp(2 pi i theta), elementwise."""
    return np.exp(1j * TWO_PI * np.asarray(theta, dtype=np.float64))


def default_pass_tolerance(span: float) -> float:
    """0.05 from span 1e3, tightening to 0.02 from span 1e5."""
    return 0.02 if span >= 1e5 else 0.05


@dataclass(frozen=True)
class TorusCharacter:
    """Frequency vector tau; evaluates points x in [0,1)^d to e(<x, tau>)."""

    tau: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(int(t) for t in self.tau))

    @property
    def trivial(self) -> bool:
        return not any(self.tau)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != len(self.tau):
            raise ValueError(
                f"character dimension {len(self.tau)} vs points dimension {pts.shape[1]}"
            )
        return phase(pts @ np.asarray(self.tau, dtype=np.float64))


class TorusSequence:
    """n -> point of [0,1)^d, vectorized."""

    def __init__(self, values_fn: Callable[[np.ndarray], np.ndarray], dimension: int,
                 domain_start: int = 1, label: str = ""):
        self.values_fn = values_fn
        self.dimension = dimension
        self.domain_start = domain_start
        self.label = label

    def values(self, ns: np.ndarray) -> np.ndarray:
        pts = np.asarray(self.values_fn(np.asarray(ns, dtype=np.int64)))
        if pts.ndim == 1:
            pts = pts[:, None]
        return np.mod(pts, 1.0)

    @classmethod
    def from_real_sequence(cls, seq, label: str = "") -> "TorusSequence":
        return cls(lambda ns: seq.values(ns) % 1.0, 1,
                   domain_start=seq.domain_start, label=label or seq.label)


def weyl_sum(
    x: TorusSequence, tau: TorusCharacter, W: WeightScheme, M: int, N: int
) -> complex:
    """Window average of the character along the sequence."""
    if tau.trivial:
        # e(<x, 0>) = 1 identically, and weights normalize exactly
        if M < W.positivity_start or N <= M or not W.span(M, N) > 0:
            raise ValueError(f"invalid window [{M}, {N})")
        return complex(1.0, 0.0)

    class _CharSeq:
        def values(self, ns):
            return tau.apply(x.values(ns))

    return complex(riesz_mean(_CharSeq(), W, M, N))


@dataclass
class CharacterVerdict:
    tau: tuple[int, ...]
    expected: float
    estimate: complex
    span: float
    deviation: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "character": list(self.tau),
            "expected": self.expected,
            "estimate_re": self.estimate.real,
            "estimate_im": self.estimate.imag,
            "span": self.span,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class WDReport:
    entries: list[CharacterVerdict]
    all_pass: bool

    def to_rows(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]


def wd_report(
    x: TorusSequence,
    W: WeightScheme,
    characters: Sequence[TorusCharacter],
    schedule: WindowSchedule,
    expected: Sequence[float],
    tol: Optional[float] = None,
) -> WDReport:
    """Tail character averages against declared expected values.

    `expected` comes from the annihilator predicate of the target subgroup
    (1 for characters trivial on it, 0 otherwise).  The tail estimate is
    taken on the largest-span window; pass iff |estimate - expected| < tol
    for every character.
    """
    if len(characters) != len(expected):
        raise ValueError("need one expected value per character")
    M, N = schedule.largest()
    span = W.span(M, N)
    tolerance = default_pass_tolerance(span) if tol is None else tol
    entries = []
    for tau, exp_val in zip(characters, expected):
        est = weyl_sum(x, tau, W, M, N)
        dev = abs(est - complex(exp_val))
        entries.append(
            CharacterVerdict(
                tau=tau.tau,
                expected=float(exp_val),
                estimate=est,
                span=span,
                deviation=dev,
                tolerance=tolerance,
                passed=dev < tolerance,
            )
        )
    return WDReport(entries, all(e.passed for e in entries))


@dataclass
class VdcCertificate:
    lhs: float
    rhs: float
    holds: bool
    length: int

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "N": self.length}


def vdc_certificate(u: Sequence[complex]) -> VdcCertificate:
    """Explicit correlation-sum bound on |mean(u)| for unit-bounded u.

    lhs = |(1/N) sum u_n|
    rhs = 2/sqrt(N) + sqrt( 1/sqrt(N)
          + (2/sqrt(N)) * sum_{1 <= m <= sqrt(N)} |(1/(N-m)) sum_n u_{n+m} conj(u_n)| )
    """
    arr = np.asarray(u, dtype=np.complex128)
    N = len(arr)
    if N < 4:
        raise ValueError("need at least 4 terms")
    if float(np.max(np.abs(arr))) > 1.0 + 1e-12:
        raise ValueError("terms must be bounded by 1 in modulus")
    lhs = abs(complex(np.sum(arr))) / N
    root = math.sqrt(N)
    K = math.isqrt(N)
    corr = 0.0
    for m in range(1, K + 1):
        inner = complex(np.vdot(arr[: N - m], arr[m:]))  # sum u_{n+m} conj(u_n)
        corr += abs(inner) / (N - m)
    rhs = 2.0 / root + math.sqrt(1.0 / root + (2.0 / root) * corr)
    return VdcCertificate(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-9, length=N)


# ---------------------------------------------------------------------------
# closed subgroups of tori


@dataclass(frozen=True)
class NamedIrrational:
    """A declared-irrational real: rational multiple of a named constant."""

    name: str
    value: float
    multiplier: Fraction = Fraction(1)

    def __float__(self):
        return float(self.multiplier) * self.value


ExactReal = Union[Fraction, NamedIrrational]


def as_exact_real(x, irrational_name: str = "") -> ExactReal:
    """Coerce a parameter to a declared-rational/irrational representation."""
    if isinstance(x, (Fraction, NamedIrrational)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        if x in NAMED_CONSTANTS:
            return NamedIrrational(x, NAMED_CONSTANTS[x])
        return Fraction(x)
    if isinstance(x, float):
        if not irrational_name:
            raise ValueError(
                "floats must come with an irrational tag; rationality is a "
                "declaration, never inferred from floats"
            )
        return NamedIrrational(irrational_name, x)
    raise TypeError(f"cannot interpret {x!r} as an exact real")


@dataclass(frozen=True)
class SlopedSubgroup:
    """Closure of the line {(t, slope*t)} in the 2-torus.

    Rational slope a/b (coprime) closes up after t runs over [0, b); an
    irrational slope fills the whole torus.
    """

    slope: ExactReal

    @classmethod
    def rational(cls, a: int, b: int) -> "SlopedSubgroup":
        return cls(Fraction(a, b))

    @classmethod
    def irrational(cls, name: str, value: Optional[float] = None) -> "SlopedSubgroup":
        if value is None:
            value = NAMED_CONSTANTS[name]
        return cls(NamedIrrational(name, value))

    @property
    def is_rational(self) -> bool:
        return isinstance(self.slope, Fraction)

    def annihilates(self, tau_x: int, tau_y: int) -> bool:
        """Character e(tau_x x + tau_y y) trivial on the line iff tau_x + slope*tau_y = 0."""
        if self.is_rational:
            return tau_x + self.slope * tau_y == 0
        return tau_x == 0 and tau_y == 0

    def character_integral(self, tau_x: int, tau_y: int) -> float:
        return 1.0 if self.annihilates(tau_x, tau_y) else 0.0


def torus_character_psi(tau_x: int, tau_y: int):
    """The 2-torus character (x, y) -> e(tau_x x + tau_y y) as a quadrature integrand."""
    return lambda x, y: phase(tau_x * np.asarray(x) + tau_y * np.asarray(y))


def haar_integral(H: SlopedSubgroup, psi, resolution: int) -> complex:
    """Integrate psi over the subgroup's normalized length measure.

    psi is a vectorized map (x, y) -> C on torus coordinates in [0,1).
    Rational slope a/b: composite midpoint over the parameter t in [0, b),
    with cells split at every point where either coordinate wraps (so
    fractional-part integrands stay smooth inside each cell).
    Irrational slope: product midpoint quadrature over the full torus.
    Midpoint error is O(1/resolution) for piecewise-smooth integrands.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if H.is_rational:
        a, b = H.slope.numerator, H.slope.denominator
        breaks = {Fraction(0), Fraction(b)}
        for k in range(1, b):
            breaks.add(Fraction(k))
        for k in range(1, abs(a)):
            breaks.add(Fraction(k * b, abs(a)))
        pts = sorted(breaks)
        slope = float(H.slope)
        total = 0.0 + 0.0j
        for lo, hi in zip(pts, pts[1:]):
            length = float(hi - lo)
            m = max(1, round(resolution * length / b))
            h = length / m
            t = float(lo) + (np.arange(m) + 0.5) * h
            vals = np.asarray(psi(np.mod(t, 1.0), np.mod(slope * t, 1.0)))
            total += complex(np.sum(vals)) * h
        return total / b
    m = max(2, math.isqrt(resolution))
    g = (np.arange(m) + 0.5) / m
    X, Y = np.meshgrid(g, g, indexing="ij")
    vals = np.asarray(psi(X.ravel(), Y.ravel()))
    return complex(np.sum(vals)) / (m * m)


@dataclass(frozen=True)
class KroneckerGroup:
    """Closure of the discrete orbit {n*alpha mod Z^d}.

    A character tau annihilates the closure iff <alpha, tau> is an integer,
    decided exactly from the declared rational/irrational coordinates
    (distinct named irrationals are treated as rationally independent).
    """

    coordinates: tuple[ExactReal, ...]

    @classmethod
    def from_values(cls, values) -> "KroneckerGroup":
        return cls(tuple(as_exact_real(v) for v in values))

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coordinates], dtype=np.float64)

    def annihilates(self, tau: Sequence[int]) -> bool:
        if len(tau) != self.dimension:
            raise ValueError("character dimension mismatch")
        rational = Fraction(0)
        irrational: dict[str, Fraction] = {}
        for t, c in zip(tau, self.coordinates):
            if isinstance(c, Fraction):
                rational += t * c
            else:
                irrational[c.name] = irrational.get(c.name, Fraction(0)) + t * c.multiplier
        if any(v != 0 for v in irrational.values()):
            return False
        return rational.denominator == 1

    def character_expectation(self, tau: Sequence[int]) -> float:
        return 1.0 if self.annihilates(tau) else 0.0


# ---------------------------------------------------------------------------
# joint floor/fraction equidistribution report


@dataclass(frozen=True)
class JointCharacter:
    """One (tau_i, h_i) pair per derivative order i = 0..level."""

    taus: tuple[tuple[int, ...], ...]
    hs: tuple[int, ...]

    def __post_init__(self):
        if len(self.taus) != len(self.hs):
            raise ValueError("need one h per tau")


def joint_expected(K: KroneckerGroup, chi: JointCharacter) -> float:
    """1 iff every tau_i annihilates the orbit closure and every h_i is 0."""
    ok = all(K.annihilates(t) for t in chi.taus) and not any(chi.hs)
    return 1.0 if ok else 0.0


def _alpha_dot_g(K: KroneckerGroup, tau: Sequence[int], gvals: np.ndarray) -> np.ndarray:
    """<tau, alpha> * g mod 1 for integer g, exact in the all-rational case."""
    rational = Fraction(0)
    irr = 0.0
    for t, c in zip(tau, K.coordinates):
        if isinstance(c, Fraction):
            rational += t * c
        else:
            irr += t * float(c)
    out = np.zeros(len(gvals), dtype=np.float64)
    if rational != 0:
        num, den = rational.numerator, rational.denominator
        out += ((gvals.astype(object) * num) % den).astype(np.float64) / den
    if irr != 0.0:
        out += (gvals.astype(np.float64) * irr) % 1.0
    return out % 1.0


def joint_floor_fraction_report(
    f: CatalogFunction,
    level: int,
    alpha: KroneckerGroup,
    characters: Sequence[JointCharacter],
    schedule: WindowSchedule,
    W: Optional[WeightScheme] = None,
    tol: Optional[float] = None,
) -> WDReport:
    """Test the paired floor/fraction derivative tuple against product-group targets.

    The tested sequence collects (alpha * D^i floor(f)(n) mod 1, D^i f(n) mod 1)
    for i = 0..level; a character evaluates to
    e( sum_i <tau_i, alpha> D^i g(n) + h_i D^i f(n) ).
    Expected value is 1 iff every <alpha, tau_i> is an integer and every
    h_i = 0, else 0.
    """
    if W is None:
        W = WeightScheme.from_function(f, level)
    g = floor_sequence(f)
    gseqs = [delta_integer(g, i) for i in range(level + 1)]
    fseqs = [delta(f, i) for i in range(level + 1)]
    M, N = schedule.largest()
    span = W.span(M, N)
    tolerance = default_pass_tolerance(span) if tol is None else tol
    ns = np.arange(M, N, dtype=np.int64)
    gvals = [s.values(ns) for s in gseqs]
    fvals = [s.values(ns) for s in fseqs]
    w = W.delta_values(ns)
    denom = W.span(M, N)
    entries = []
    for chi in characters:
        if len(chi.taus) != level + 1:
            raise ValueError("character must cover orders 0..level")
        theta = np.zeros(len(ns), dtype=np.float64)
        for i in range(level + 1):
            theta += _alpha_dot_g(alpha, chi.taus[i], gvals[i])
            if chi.hs[i]:
                theta += (chi.hs[i] * fvals[i]) % 1.0
        est = complex(np.sum(w * phase(theta))) / denom
        exp_val = joint_expected(alpha, chi)
        dev = abs(est - exp_val)
        entries.append(
            CharacterVerdict(
                tau=tuple(t for ts in chi.taus for t in ts) + tuple(chi.hs),
                expected=exp_val,
                estimate=est,
                span=span,
                deviation=dev,
                tolerance=tolerance,
                passed=dev < tolerance,
            )
        )
    return WDReport(entries, all(e.passed for e in entries))
