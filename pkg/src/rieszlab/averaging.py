"""Weighted averaging along the increments of a growth function.

A weight scheme is a nondecreasing unbounded W whose increments
DW(n) = W(n+1) - W(n) serve as averaging weights.  The weighted mean of a
bounded sequence over a window [M, N) is

    sum_{M <= n < N} DW(n) a(n) / (W(N) - W(M)),

which reduces to the ordinary Cesaro average when W(n) = n.  Density,
syndeticity and thickness checks for subsets of the naturals are all
phrased through these window means.

Windows are half-open so the weights telescope exactly to the normalizer;
constants average to themselves to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .differences import IntegerSequence, RealSequence, delta
from .errors import DegenerateWindowError

DEFAULT_CHUNK = 1 << 20


class SubsetOfNaturals:
    """A deterministic subset of N given by a predicate or an explicit list."""

    def __init__(
        self,
        predicate: Optional[Callable[[int], bool]] = None,
        members: Optional[Iterable[int]] = None,
        vector_predicate: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        label: str = "",
    ):
        if (predicate is None) == (members is None):
            raise ValueError("provide exactly one of predicate / members")
        self.label = label
        self._predicate = predicate
        self._vector_predicate = vector_predicate
        self._members = None
        if members is not None:
            self._members = np.unique(np.asarray(list(members), dtype=np.int64))

    @classmethod
    def from_predicate(cls, predicate, vector_predicate=None, label=""):
        return cls(predicate=predicate, vector_predicate=vector_predicate, label=label)

    @classmethod
    def from_members(cls, members, label=""):
        return cls(members=members, label=label)

    @classmethod
    def naturals(cls):
        return cls(predicate=lambda n: True,
                   vector_predicate=lambda ns: np.ones(len(ns), dtype=bool),
                   label="N")

    @classmethod
    def empty(cls):
        return cls(members=(), label="empty")

    @property
    def members(self) -> Optional[np.ndarray]:
        return self._members

    def __contains__(self, n: int) -> bool:
        if self._members is not None:
            i = np.searchsorted(self._members, n)
            return bool(i < len(self._members) and self._members[i] == n)
        return bool(self._predicate(int(n)))

    def indicator_values(self, ns: np.ndarray) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if self._members is not None:
            out = np.zeros(len(ns), dtype=np.float64)
            idx = np.searchsorted(self._members, ns)
            ok = idx < len(self._members)
            out[ok] = (self._members[idx[ok]] == ns[ok]).astype(np.float64)
            return out
        if self._vector_predicate is not None:
            return np.asarray(self._vector_predicate(ns), dtype=np.float64)
        return np.array([1.0 if self._predicate(int(n)) else 0.0 for n in ns])


class WeightScheme:
    """W together with its increments DW used as averaging weights.

    positivity_start is the first index from which DW stays positive (probed
    numerically at construction; windows must start at or after it).  When
    built from a catalog function, the increments of the level-th difference
    are evaluated directly as the (level+1)-th difference, which keeps them
    accurate where naive subtraction of near-equal W values would not be.
    """

    def __init__(
        self,
        W: RealSequence,
        positivity_start: Optional[int] = None,
        probe: int = 2048,
        search_limit: int = 1 << 22,
        increments: Optional[RealSequence] = None,
    ):
        self.W = W
        self.label = W.label or "W"
        self._increments = increments
        if positivity_start is None:
            positivity_start = self._detect_positivity(probe, search_limit)
        self.positivity_start = positivity_start

    @classmethod
    def from_function(cls, f, level: Optional[int] = None, **kw) -> "WeightScheme":
        """Weights from the level-th difference of a catalog function."""
        if level is None:
            level = getattr(f, "declared_level", 0)
        return cls(delta(f, level), increments=delta(f, level + 1), **kw)

    def _detect_positivity(self, probe: int, search_limit: int) -> int:
        start = self.W.domain_start
        candidate = start
        span = probe
        while candidate + span < search_limit:
            ns = np.arange(candidate, candidate + span, dtype=np.int64)
            dw = self.delta_values(ns)
            bad = np.nonzero(dw <= 0)[0]
            if bad.size == 0:
                return candidate
            candidate = candidate + int(bad[-1]) + 1
            span *= 2
        raise ValueError(
            f"{self.label}: increments not eventually positive within {search_limit}"
        )

    def value(self, n: int) -> float:
        return self.W(n)

    def delta_values(self, ns: np.ndarray) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if self._increments is not None:
            return self._increments.values(ns)
        return self.W.values(ns + 1) - self.W.values(ns)

    def span(self, M: int, N: int) -> float:
        return self.W(N) - self.W(M)

    def window_for_span(self, M: int, target: float, hi_cap: int = 1 << 62) -> int:
        """Smallest N with span(M, N) >= target (W nondecreasing beyond M)."""
        lo, hi = M + 1, M + 2
        while self.span(M, hi) < target:
            lo = hi
            hi = min(2 * hi, hi_cap)
            if hi == hi_cap:
                raise ValueError("span target unreachable below cap")
        while lo < hi:
            mid = (lo + hi) // 2
            if self.span(M, mid) >= target:
                hi = mid
            else:
                lo = mid + 1
        return lo


def _evaluate_on(a, ns: np.ndarray) -> np.ndarray:
    if isinstance(a, SubsetOfNaturals):
        return a.indicator_values(ns)
    if isinstance(a, (RealSequence, IntegerSequence)):
        return a.values(ns)
    values = getattr(a, "values", None)
    if values is not None:
        return np.asarray(values(ns))
    return np.asarray([a(int(n)) for n in ns])


def riesz_mean(a, W: WeightScheme, M: int, N: int, chunk: int = DEFAULT_CHUNK) -> complex:
    """Weighted mean of a over [M, N): sum DW(n) a(n) / (W(N) - W(M)).

    Per-chunk sums use numpy pairwise summation; chunk partials are combined
    with exact fsum.  The result is real when a is real-valued.
    """
    if M < W.positivity_start:
        raise ValueError(
            f"window start {M} precedes positivity_start {W.positivity_start}"
        )
    if N <= M:
        raise DegenerateWindowError(f"window [{M}, {N}) is empty")
    denom = W.span(M, N)
    if not denom > 0:
        raise DegenerateWindowError(
            f"window [{M}, {N}) has nonpositive weight span {denom}"
        )
    real_parts = []
    imag_parts = []
    is_complex = False
    for lo in range(M, N, chunk):
        hi = min(lo + chunk, N)
        ns = np.arange(lo, hi, dtype=np.int64)
        w = W.delta_values(ns)
        if w.size and float(w.min()) < 0:
            raise ValueError(
                f"negative weight inside window [{M}, {N}); positivity_start is wrong"
            )
        av = _evaluate_on(a, ns)
        if np.iscomplexobj(av):
            is_complex = True
            real_parts.append(float(np.sum(w * av.real)))
            imag_parts.append(float(np.sum(w * av.imag)))
        else:
            real_parts.append(float(np.sum(w * av)))
    re = math.fsum(real_parts) / denom
    if is_complex:
        return complex(re, math.fsum(imag_parts) / denom)
    return re


@dataclass(frozen=True)
class WindowSchedule:
    """Windows (M_i, N_i) whose weight spans increase across the schedule."""

    windows: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for M, N in self.windows:
            if M > N:
                raise ValueError(f"window ({M}, {N}) has M > N")

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def spans(self, W: WeightScheme) -> list[float]:
        return [W.span(M, N) for M, N in self.windows]

    def largest(self) -> tuple[int, int]:
        return self.windows[-1]

    @classmethod
    def geometric(
        cls,
        W: WeightScheme,
        n0: int,
        count: int,
        rho: float = 2.0,
        seed: int = 0,
        start: Optional[int] = None,
    ) -> "WindowSchedule":
        """N_i = ceil(n0 * rho^i), M_i seeded at random below N_i / 2.

        Window starts probe uniformity; spans are forced strictly increasing
        (falling back to M_i = start when a random draw would break that).
        Deterministic given the seed.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        if rho <= 1:
            raise ValueError("rho must be > 1")
        start = W.positivity_start if start is None else max(start, W.positivity_start)
        rng = np.random.default_rng(seed)
        windows = []
        prev_span = 0.0
        for i in range(count):
            N = max(start + 2, math.ceil(n0 * rho**i))
            hi = max(start + 1, N // 2)
            M = int(rng.integers(start, hi)) if hi > start else start
            if W.span(M, N) <= prev_span:
                M = start
            span = W.span(M, N)
            if span <= prev_span:
                continue
            windows.append((M, N))
            prev_span = span
        return cls(tuple(windows))


@dataclass
class UWReport:
    """Per-window estimates plus a tail-deviation convergence diagnostic."""

    windows: list[tuple[int, int]]
    spans: list[float]
    estimates: list[complex]
    tail_deviation: float

    def converged(self, tol: float) -> bool:
        return self.tail_deviation < tol

    @property
    def tail_estimate(self) -> complex:
        return self.estimates[-1]

    def to_rows(self) -> list[dict]:
        return [
            {
                "M": M,
                "N": N,
                "span": s,
                "estimate_re": complex(e).real,
                "estimate_im": complex(e).imag,
            }
            for (M, N), s, e in zip(self.windows, self.spans, self.estimates)
        ]

    def to_records(self) -> list[dict]:
        """JSON record shape: {window: [M, N], span, estimate_re, estimate_im}."""
        return [
            {
                "window": [M, N],
                "span": s,
                "estimate_re": complex(e).real,
                "estimate_im": complex(e).imag,
            }
            for (M, N), s, e in zip(self.windows, self.spans, self.estimates)
        ]


def _tail_slice(k: int) -> slice:
    return slice(k - max(1, k // 3), k)


def uw_lim_estimate(a, W: WeightScheme, schedule: WindowSchedule) -> UWReport:
    """Window-by-window weighted means plus max deviation over the last third."""
    if len(schedule) < 3:
        raise ValueError("schedule must contain at least 3 windows")
    estimates = [riesz_mean(a, W, M, N) for M, N in schedule]
    tail = estimates[_tail_slice(len(estimates))]
    deviation = max(
        abs(complex(x) - complex(y)) for x in tail for y in tail
    )
    return UWReport(
        windows=list(schedule.windows),
        spans=schedule.spans(W),
        estimates=estimates,
        tail_deviation=deviation,
    )


def upper_w_density(
    R: SubsetOfNaturals, W: WeightScheme, N_schedule: Sequence[int]
) -> float:
    """Weighted density estimate: max over the schedule tail of the initial-window means."""
    Ns = list(N_schedule)
    if not Ns or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("N_schedule must be strictly increasing and non-empty")
    start = W.positivity_start
    estimates = [riesz_mean(R, W, start, N).real for N in Ns if N > start]
    if not estimates:
        raise ValueError("schedule entirely below positivity_start")
    tail = estimates[_tail_slice(len(estimates))]
    return float(max(tail))


def banach_w_density(
    E: SubsetOfNaturals, W: WeightScheme, schedule: WindowSchedule
) -> tuple[float, float]:
    """Desk-scale bracket [min, max] of window means of the indicator."""
    estimates = [riesz_mean(E, W, M, N).real for M, N in schedule]
    return float(min(estimates)), float(max(estimates))


@dataclass
class SyndeticityReport:
    passed: bool
    witness: Optional[tuple[int, int]]
    probes_checked: int
    min_mass: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "witness": list(self.witness) if self.witness else None,
            "probes_checked": self.probes_checked,
            "min_mass": self.min_mass,
        }


def w_syndetic_check(
    R: SubsetOfNaturals,
    W: WeightScheme,
    l: float,
    probe_windows: Iterable[tuple[int, int]],
) -> SyndeticityReport:
    """Check sum_{n in R cap [M, N]} DW(n) >= 1 on every probe window.

    Probe windows are closed intervals and must have weight span >= l.
    Any finite probe set is a sound falsifier but an incomplete verifier;
    the report records how many probes were checked.
    """
    min_mass = math.inf
    checked = 0
    for M, N in probe_windows:
        span = W.span(M, N)
        if span < l:
            raise ValueError(f"probe window ({M}, {N}) has span {span} < l = {l}")
        ns = np.arange(M, N + 1, dtype=np.int64)
        mass = float(np.sum(W.delta_values(ns) * R.indicator_values(ns)))
        checked += 1
        min_mass = min(min_mass, mass)
        if mass < 1.0:
            return SyndeticityReport(False, (M, N), checked, min_mass)
    return SyndeticityReport(True, None, checked, min_mass)


def random_probe_windows(
    W: WeightScheme,
    l: float,
    count: int,
    seed: int,
    lo: int,
    hi: int,
    span_multipliers: Sequence[int] = (1, 2, 4),
) -> list[tuple[int, int]]:
    """Seeded random closed windows inside [lo, hi] with spans >= l * multiplier."""
    rng = np.random.default_rng(seed)
    lo = max(lo, W.positivity_start)
    windows = []
    for i in range(count):
        target = l * span_multipliers[i % len(span_multipliers)]
        for _ in range(64):
            M = int(rng.integers(lo, hi))
            N = W.window_for_span(M, target)
            if N <= hi:
                windows.append((M, N))
                break
    return windows


@dataclass
class ThicknessReport:
    passed: bool
    run_target: int
    horizon: int
    runs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def longest_run(self) -> int:
        return max((length for _, length in self.runs), default=0)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "run_target": self.run_target,
            "horizon": self.horizon,
            "longest_run": self.longest_run,
            "runs": [list(r) for r in self.runs[:64]],
        }


def thickness_check(
    R: SubsetOfNaturals, L: int, horizon: int, chunk: int = DEFAULT_CHUNK
) -> ThicknessReport:
    """All maximal runs of consecutive members of length >= L within [1, horizon].

    A desk-scale proxy for thickness: passing exhibits witnesses, failing
    only says no long run appears below the horizon.
    """
    if L < 1:
        raise ValueError("run target L must be >= 1")
    runs: list[tuple[int, int]] = []
    run_start = None
    for lo in range(1, horizon + 1, chunk):
        hi = min(lo + chunk, horizon + 1)
        ns = np.arange(lo, hi, dtype=np.int64)
        mask = R.indicator_values(ns) > 0.5
        idx = 0
        while idx < len(mask):
            if mask[idx]:
                if run_start is None:
                    run_start = lo + idx
                nz = np.nonzero(~mask[idx:])[0]
                if nz.size:
                    end = lo + idx + int(nz[0])  # exclusive
                    length = end - run_start
                    if length >= L:
                        runs.append((run_start, length))
                    run_start = None
                    idx = idx + int(nz[0]) + 1
                else:
                    break
            else:
                nz = np.nonzero(mask[idx:])[0]
                if nz.size:
                    idx += int(nz[0])
                else:
                    break
    if run_start is not None:
        length = horizon + 1 - run_start
        if length >= L:
            runs.append((run_start, length))
    return ThicknessReport(bool(runs), L, horizon, runs)


@dataclass
class FolnerThicknessReport:
    hypothesis_met: bool
    window_means: list[float]
    epsilon: float
    level_value: float
    thickness: Optional[ThicknessReport]

    @property
    def passed(self) -> bool:
        return self.hypothesis_met and self.thickness is not None and self.thickness.passed


def thick_from_folner(
    x,
    L: float,
    epsilon: float,
    schedule: WindowSchedule,
    run_target: int = 10,
) -> FolnerThicknessReport:
    """Check the averaged-deviation hypothesis, then scan {n : x_n > L - eps} for runs.

    The hypothesis (interval Folner means of |x_n - L| decaying) is accepted
    when every last-third window mean is below eps/4; the exceedance set is
    then scanned for runs up to the largest window's right endpoint.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    means = []
    for M, N in schedule:
        ns = np.arange(M, N, dtype=np.int64)
        vals = _evaluate_on(x, ns)
        means.append(float(np.mean(np.abs(vals - L))))
    tail = means[_tail_slice(len(means))]
    hypothesis = all(m < epsilon / 4 for m in tail)
    thickness = None
    if hypothesis:
        horizon = schedule.largest()[1]
        exceed = SubsetOfNaturals.from_predicate(
            lambda n: _evaluate_on(x, np.array([n]))[0] > L - epsilon,
            vector_predicate=lambda ns: _evaluate_on(x, ns) > L - epsilon,
            label="exceedance",
        )
        thickness = thickness_check(exceed, run_target, horizon)
    return FolnerThicknessReport(hypothesis, means, epsilon, L, thickness)


def thickness_run_target(horizon: int) -> int:
    """Default run-length target: 10 at horizon 1e5, 5 more per decade."""
    return max(5, 5 * (int(math.log10(max(horizon, 10))) - 3))
