"""Return-set computation and largeness analysis.

For a measure-preserving system, a target set A of positive measure and a
growth function f, the optimal single-return set collects the n with
mu(A cap T^(-floor f(n)) A) > mu(A)^2 - eps, and the multiple-return set
the n where the first k+1 consecutive floor shifts of A still intersect in
positive measure.  Reports attach the largeness checks (runs of consecutive
members, weighted syndeticity on probe windows) and weighted window means
of the measure sequence against the mu(A)^2 lower bound.

Rotations with arc targets and finite cyclic systems are computed exactly;
everything else falls back to seeded Monte Carlo with an explicit
positivity threshold of four standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .averaging import (
    SubsetOfNaturals,
    SyndeticityReport,
    ThicknessReport,
    UWReport,
    WeightScheme,
    WindowSchedule,
    random_probe_windows,
    thickness_check,
    thickness_run_target,
    uw_lim_estimate,
    w_syndetic_check,
)
from .catalog import CatalogFunction
from .differences import (
    DeltaPolynomial,
    RealSequence,
    apply_delta_polynomial,
    floor_sequence,
)
from .systems import (
    ArcSet,
    BoxSet,
    CyclicSystem,
    RotationSystem,
    arc_autocorrelation,
    arc_intersection_measure,
    measure_estimate,
)

MC_SAMPLES = 4000
MC_POSITIVITY_FACTOR = 4.0


def set_measure(system, A) -> float:
    if isinstance(system, CyclicSystem):
        return float(system.set_measure(A))
    if isinstance(A, (ArcSet, BoxSet)):
        return float(A.measure())
    raise TypeError(f"no measure available for set {A!r}")


def _is_exact_rotation(system, A) -> bool:
    return (
        isinstance(system, RotationSystem)
        and system.dimension == 1
        and isinstance(A, ArcSet)
    )


def _rotation_measures(
    system: RotationSystem, A: ArcSet, shifts_m: np.ndarray, sign: int
) -> np.ndarray:
    """mu(A cap (A - sign * m * alpha)) for an int64 array of exponents m."""
    alpha = system.alpha[0]
    if isinstance(alpha, Fraction):
        # m * alpha mod 1 depends only on m mod q: tabulate exact measures per residue
        q = alpha.denominator
        p = alpha.numerator
        table = np.empty(q, dtype=np.float64)
        for r in range(q):
            shift = Fraction(sign * r * p, q) % 1
            table[r] = float(arc_intersection_measure(A, [shift]))
        return table[np.mod(shifts_m, q)]
    svals = np.mod(shifts_m.astype(np.float64) * (sign * float(alpha)), 1.0)
    return arc_autocorrelation(A, svals)


def _single_measure_sequence(system, A, f: CatalogFunction) -> RealSequence:
    """n -> mu(A cap T^(-floor f(n)) A) as an evaluable sequence."""
    g = floor_sequence(f)
    if _is_exact_rotation(system, A):

        def vector_fn(ns: np.ndarray) -> np.ndarray:
            return _rotation_measures(system, A, g.values(ns), sign=+1)

        return RealSequence(
            lambda n: float(vector_fn(np.array([n], dtype=np.int64))[0]),
            domain_start=f.domain_start,
            label="mu(A,T^-g A)",
            vector_fn=vector_fn,
        )
    if isinstance(system, CyclicSystem):

        def fn(n: int) -> float:
            return float(system.intersection_measure(A, [g(n)]))

        return RealSequence(fn, domain_start=f.domain_start, label="mu(A,T^-g A)")

    def fn(n: int) -> float:
        return measure_estimate(
            system, A, shifts=[g(n)], samples=MC_SAMPLES, seed=10_000 + n
        ).estimate

    return RealSequence(fn, domain_start=f.domain_start, label="mu(A,T^-g A)")


@dataclass
class ReturnSetReport:
    kind: str
    horizon: int
    epsilon: Optional[float]
    measure_floor: float
    members: SubsetOfNaturals
    measures: Optional[np.ndarray]
    shift_columns: list[np.ndarray]
    thickness: ThicknessReport
    syndeticity: Optional[SyndeticityReport]
    khintchine: Optional[UWReport]
    no_witness: bool

    @property
    def member_count(self) -> int:
        return 0 if self.members.members is None else int(len(self.members.members))

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "epsilon": self.epsilon,
            "measure_floor": self.measure_floor,
            "member_count": self.member_count,
            "no_witness": self.no_witness,
            "thickness": self.thickness.to_dict(),
            "syndeticity": self.syndeticity.to_dict() if self.syndeticity else None,
            "khintchine_tail": (
                [complex(e).real for e in self.khintchine.estimates]
                if self.khintchine
                else None
            ),
        }


def _largeness_checks(
    member_mask: np.ndarray,
    f: CatalogFunction,
    level: int,
    horizon: int,
    run_target: Optional[int],
    syndetic_l: float,
    probe_count: int,
    seed: int,
) -> tuple[SubsetOfNaturals, ThicknessReport, Optional[SyndeticityReport]]:
    members = np.nonzero(member_mask)[0]
    subset = SubsetOfNaturals.from_members(members[members >= 1], label="R")
    target = run_target if run_target is not None else thickness_run_target(horizon)
    thick = thickness_check(subset, target, horizon)
    syndetic = None
    W = WeightScheme.from_function(f, level)
    lo = W.positivity_start
    if W.span(lo, horizon) > 4 * syndetic_l:
        probes = random_probe_windows(
            W, syndetic_l, probe_count, seed=seed, lo=lo, hi=horizon
        )
        syndetic = w_syndetic_check(subset, W, syndetic_l, probes)
    return subset, thick, syndetic


def single_return_set(
    system,
    A,
    f: CatalogFunction,
    epsilon: float,
    horizon: int,
    level: Optional[int] = None,
    run_target: Optional[int] = None,
    syndetic_l: float = 5.0,
    probe_count: int = 200,
    seed: int = 0,
) -> ReturnSetReport:
    """Members n <= horizon with mu(A cap T^(-floor f(n)) A) > mu(A)^2 - eps.

    Measures are exact for 1-d rotations with arc targets and for cyclic
    systems, Monte Carlo otherwise.  The report attaches run, syndeticity
    and windowed-mean checks.
    """
    mu = set_measure(system, A)
    if mu <= 0:
        raise ValueError("target set must have positive measure")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if level is None:
        level = f.declared_level
    seq = _single_measure_sequence(system, A, f)
    ns = np.arange(max(1, f.domain_start), horizon + 1, dtype=np.int64)
    shift_columns = [floor_sequence(f).values(ns)]
    measures = seq.values(ns)
    floor_value = mu * mu
    member_mask = np.zeros(horizon + 1, dtype=bool)
    member_mask[ns] = measures > floor_value - epsilon
    subset, thick, syndetic = _largeness_checks(
        member_mask, f, level, horizon, run_target, syndetic_l, probe_count, seed
    )
    khintchine = None
    W = WeightScheme.from_function(f, level)
    lo = W.positivity_start
    if W.span(lo, horizon) > 8:
        schedule = WindowSchedule.geometric(
            W, n0=max(lo + 2, horizon // 16), count=5, seed=seed, start=lo
        )
        schedule = WindowSchedule(
            tuple((M, min(N, horizon)) for M, N in schedule if M < horizon)
        )
        if len(schedule) >= 3:
            khintchine = uw_lim_estimate(seq, W, schedule)
    return ReturnSetReport(
        kind="single",
        horizon=horizon,
        epsilon=epsilon,
        measure_floor=floor_value,
        members=subset,
        measures=measures,
        shift_columns=shift_columns,
        thickness=thick,
        syndeticity=syndetic,
        khintchine=khintchine,
        no_witness=subset.members is None or len(subset.members) == 0,
    )


def _forward_intersection_measures(
    system, A, shift_columns: list[np.ndarray], exact: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Per-n measures of A cap T^(s_1) A cap ... and the membership threshold.

    Positive exponents: x in T^(m) A iff T^(-m) x in A.
    Returns (measures, thresholds); membership is measures > thresholds.
    """
    count = len(shift_columns[0])
    measures = np.zeros(count, dtype=np.float64)
    thresholds = np.zeros(count, dtype=np.float64)
    if exact and isinstance(system, RotationSystem):
        A_exact = A
        alpha = system.alpha[0]
        for i in range(count):
            ms = [int(col[i]) for col in shift_columns]
            if isinstance(alpha, Fraction):
                shifts = [(-m * alpha) % 1 for m in ms]
            else:
                shifts = [(-m * float(alpha)) % 1.0 for m in ms]
            measures[i] = float(arc_intersection_measure(A_exact, shifts))
        return measures, thresholds
    if isinstance(system, CyclicSystem):
        for i in range(count):
            ms = [-int(col[i]) for col in shift_columns]
            measures[i] = float(system.intersection_measure(A, ms))
        return measures, thresholds
    for i in range(count):
        ms = [-int(col[i]) for col in shift_columns]
        est = measure_estimate(system, A, shifts=ms, samples=MC_SAMPLES, seed=20_000 + i)
        measures[i] = est.estimate
        thresholds[i] = MC_POSITIVITY_FACTOR * est.stderr
    return measures, thresholds


def multiple_return_set(
    system,
    A,
    f: CatalogFunction,
    k: int,
    horizon: int,
    level: Optional[int] = None,
    run_target: Optional[int] = None,
    syndetic_l: float = 5.0,
    probe_count: int = 200,
    seed: int = 0,
) -> ReturnSetReport:
    """Members n with mu(A cap T^(floor f(n)) A cap ... cap T^(floor f(n+k)) A) > 0.

    Exact arc/cyclic arithmetic makes the positivity test exact; Monte Carlo
    systems use a four-standard-error positivity threshold.  An empty result
    is reported as "no witness below the horizon", not as a refutation.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    mu = set_measure(system, A)
    if mu <= 0:
        raise ValueError("target set must have positive measure")
    if level is None:
        level = f.declared_level
    g = floor_sequence(f)
    ns = np.arange(max(1, f.domain_start), horizon + 1, dtype=np.int64)
    columns = [g.values(ns + i) for i in range(k + 1)]
    exact = _is_exact_rotation(system, A) or isinstance(system, CyclicSystem)
    measures, thresholds = _forward_intersection_measures(system, A, columns, exact)
    member_mask = np.zeros(horizon + 1, dtype=bool)
    member_mask[ns] = measures > thresholds
    subset, thick, syndetic = _largeness_checks(
        member_mask, f, level, horizon, run_target, syndetic_l, probe_count, seed
    )
    return ReturnSetReport(
        kind=f"multiple(k={k})",
        horizon=horizon,
        epsilon=None,
        measure_floor=0.0,
        members=subset,
        measures=measures,
        shift_columns=columns,
        thickness=thick,
        syndeticity=syndetic,
        khintchine=None,
        no_witness=subset.members is None or len(subset.members) == 0,
    )


def poly_delta_return_set(
    system,
    A,
    f: CatalogFunction,
    polynomials: Sequence[DeltaPolynomial],
    horizon: int,
    level: Optional[int] = None,
    run_target: Optional[int] = None,
    syndetic_l: float = 5.0,
    probe_count: int = 200,
    seed: int = 0,
) -> ReturnSetReport:
    """Members n with mu(A cap T^(floor p_1(D)f(n)) A cap ...) > 0.

    Shifts come from applying each difference polynomial to f and flooring
    (exactly, when the base supports it); the membership machinery matches
    multiple_return_set, so p_i = (1+x)^i for i = 0..k reproduces the
    consecutive-shift set exactly.
    """
    if not polynomials:
        raise ValueError("need at least one difference polynomial")
    mu = set_measure(system, A)
    if mu <= 0:
        raise ValueError("target set must have positive measure")
    if level is None:
        level = f.declared_level
    seqs = [floor_sequence(apply_delta_polynomial(p, f)) for p in polynomials]
    ns = np.arange(max(1, f.domain_start), horizon + 1, dtype=np.int64)
    columns = [s.values(ns) for s in seqs]
    exact = _is_exact_rotation(system, A) or isinstance(system, CyclicSystem)
    measures, thresholds = _forward_intersection_measures(system, A, columns, exact)
    member_mask = np.zeros(horizon + 1, dtype=bool)
    member_mask[ns] = measures > thresholds
    subset, thick, syndetic = _largeness_checks(
        member_mask, f, level, horizon, run_target, syndetic_l, probe_count, seed
    )
    return ReturnSetReport(
        kind=f"poly_delta(k={len(polynomials)})",
        horizon=horizon,
        epsilon=None,
        measure_floor=0.0,
        members=subset,
        measures=measures,
        shift_columns=columns,
        thickness=thick,
        syndeticity=syndetic,
        khintchine=None,
        no_witness=subset.members is None or len(subset.members) == 0,
    )


@dataclass
class KhintchineReport:
    uw: UWReport
    mu: float
    mu_squared: float
    tolerance: float
    bound_met: bool

    def summary(self) -> dict:
        return {
            "mu": self.mu,
            "mu_squared": self.mu_squared,
            "tolerance": self.tolerance,
            "bound_met": self.bound_met,
            "estimates": [complex(e).real for e in self.uw.estimates],
            "spans": self.uw.spans,
            "windows": self.uw.to_records(),
        }


def khintchine_tail(
    system,
    A,
    f: CatalogFunction,
    schedule: WindowSchedule,
    tolerance: float = 0.01,
    level: Optional[int] = None,
) -> KhintchineReport:
    """Window means of n -> mu(A cap T^(-floor f(n)) A) against the mu(A)^2 bound.

    bound_met iff every last-third window estimate is >= mu(A)^2 - tolerance.
    """
    mu = set_measure(system, A)
    if mu <= 0:
        raise ValueError("target set must have positive measure")
    if level is None:
        level = f.declared_level
    W = WeightScheme.from_function(f, level)
    seq = _single_measure_sequence(system, A, f)
    uw = uw_lim_estimate(seq, W, schedule)
    k = len(uw.estimates)
    tail = uw.estimates[k - max(1, k // 3):]
    bound = all(complex(e).real >= mu * mu - tolerance for e in tail)
    return KhintchineReport(
        uw=uw, mu=mu, mu_squared=mu * mu, tolerance=tolerance, bound_met=bound
    )
