"""Constructive search for intervals where the level-th floor difference is constant.

When all fractional parts {D^i f(a)} for i <= level and the raw value
D^(level+1) f(a) sit below the threshold

    delta = 1 / (2 (1 + 3^(level+1) 2^N)),

the level-th difference of g = floor(f) cannot move on [a, a+N]: Newton
expansion keeps every fractional part below 2^N delta, and a step of
D^level g would need a full unit.  The search scans ascending indices for
the threshold conditions and re-verifies each hit by direct (exact where
available) floor evaluation — a found-but-unverified block is an internal
error, never an expected outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .averaging import SubsetOfNaturals, WeightScheme, upper_w_density
from .catalog import CatalogFunction
from .differences import delta, delta_integer, floor_sequence
from .errors import LemmaViolationError

SCAN_CHUNK = 1 << 20


def block_delta(level: int, N: int) -> Fraction:
    """Threshold 1/(2(1 + 3^(level+1) 2^N)): factor-2 margin inside the strict bound."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if N < 1:
        raise ValueError("block length N must be >= 1")
    denom = 2 * (1 + 3 ** (level + 1) * 2**N)
    value = Fraction(1, denom)
    if float(value) == 0.0:
        raise OverflowError(
            f"threshold for level={level}, N={N} underflows double precision"
        )
    return value


@dataclass(frozen=True)
class BlockWitness:
    """A verified interval [a, a+N] on which D^level floor(f) is constant."""

    a: int
    length: int
    value: int
    delta: float
    level: int

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "N": self.length,
            "s": self.value,
            "delta": self.delta,
            "ell": self.level,
        }


def _fractional_conditions(
    f: CatalogFunction, level: int, ns: np.ndarray, threshold: float
) -> np.ndarray:
    """Mask of indices where {D^i f} < threshold for all i <= level and D^(level+1) f < threshold."""
    mask = np.ones(len(ns), dtype=bool)
    for i in range(level + 1):
        vals = delta(f, i).values(ns)
        mask &= np.mod(vals, 1.0) < threshold
        if not mask.any():
            return mask
    mask &= delta(f, level + 1).values(ns) < threshold
    return mask


def verify_block(f: CatalogFunction, level: int, a: int, N: int) -> int:
    """Directly evaluate D^level floor(f) on [a, a+N]; return the constant value.

    Raises LemmaViolationError when the block is not constant — that
    contradicts the threshold construction and signals a bug or float
    boundary issue.
    """
    g = floor_sequence(f)
    dg = delta_integer(g, level)
    values = [dg(a + n) for n in range(N + 1)]
    if len(set(values)) != 1:
        raise LemmaViolationError(
            f"block at a={a} failed re-verification: D^{level} g takes values "
            f"{sorted(set(values))} on [a, a+{N}]"
        )
    return values[0]


def find_block(
    f: CatalogFunction,
    N: int,
    delta_threshold: Optional[Fraction | float] = None,
    horizon: int = 10**6,
    level: Optional[int] = None,
    chunk: int = SCAN_CHUNK,
) -> Optional[BlockWitness]:
    """First index a <= horizon meeting the threshold conditions, verified.

    Scan order is ascending from the domain start; the first hit is
    returned after exact re-verification of the constant block.  None means
    no witness below the horizon (not a refutation).
    """
    if level is None:
        level = f.declared_level
    if delta_threshold is None:
        delta_threshold = block_delta(level, N)
    thr = float(delta_threshold)
    if thr <= 0:
        raise ValueError("threshold must be positive")
    start = f.domain_start
    for lo in range(start, horizon + 1, chunk):
        hi = min(lo + chunk, horizon + 1)
        ns = np.arange(lo, hi, dtype=np.int64)
        mask = _fractional_conditions(f, level, ns, thr)
        idx = np.nonzero(mask)[0]
        if idx.size:
            a = int(ns[idx[0]])
            s = verify_block(f, level, a, N)
            return BlockWitness(a=a, length=N, value=s, delta=thr, level=level)
    return None


@dataclass
class DSetResult:
    members: SubsetOfNaturals
    density_estimate: float
    count: int
    horizon: int
    chop_onset: Optional[int]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "horizon": self.horizon,
            "density_estimate": self.density_estimate,
            "chop_onset": self.chop_onset,
        }


def torus_distance(values: np.ndarray) -> np.ndarray:
    """Distance to the nearest integer, elementwise."""
    frac = np.mod(values, 1.0)
    return np.minimum(frac, 1.0 - frac)


def d_set(
    f: CatalogFunction,
    level: int,
    alpha: Sequence[float],
    delta_threshold: float,
    horizon: int,
    chunk: int = SCAN_CHUNK,
) -> DSetResult:
    """Indices where all D^i floor(f) * alpha are near 0 mod 1 and {D^i f} is small.

    Membership: max_j ||D^i g(a) * alpha_j|| <= delta and {D^i f(a)} < delta
    for every i <= level.  The weighted density estimate uses the level-th
    difference of f as the weight scheme.  chop_onset records the first
    index with D^(level+1) f below the threshold (the point after which the
    finitely many bad indices could be chopped off).
    """
    if delta_threshold <= 0:
        raise ValueError("delta must be positive")
    alpha_arr = np.asarray(alpha, dtype=np.float64).reshape(-1)
    g = floor_sequence(f)
    members: list[int] = []
    chop_onset: Optional[int] = None
    start = f.domain_start
    for lo in range(start, horizon + 1, chunk):
        hi = min(lo + chunk, horizon + 1)
        ns = np.arange(lo, hi, dtype=np.int64)
        mask = np.ones(len(ns), dtype=bool)
        for i in range(level + 1):
            gv = delta_integer(g, i).values(ns).astype(np.float64)
            dist = np.max(
                torus_distance(gv[:, None] * alpha_arr[None, :]), axis=1
            )
            mask &= dist <= delta_threshold
            fv = delta(f, i).values(ns)
            mask &= np.mod(fv, 1.0) < delta_threshold
        members.extend(int(n) for n in ns[mask])
        if chop_onset is None:
            tail_ok = delta(f, level + 1).values(ns) < delta_threshold
            idx = np.nonzero(tail_ok)[0]
            if idx.size:
                chop_onset = int(ns[idx[0]])
    subset = SubsetOfNaturals.from_members(members, label="D")
    W = WeightScheme.from_function(f, level)
    ladder = _geometric_ladder(max(W.positivity_start + 2, 16), horizon)
    density = upper_w_density(subset, W, ladder) if ladder else 0.0
    return DSetResult(
        members=subset,
        density_estimate=density,
        count=len(members),
        horizon=horizon,
        chop_onset=chop_onset,
    )


def _geometric_ladder(lo: int, hi: int, factor: float = 2.0) -> list[int]:
    out = []
    x = float(lo)
    while x < hi:
        out.append(int(x))
        x *= factor
    if not out or out[-1] != hi:
        out.append(hi)
    return [n for i, n in enumerate(out) if i == 0 or n > out[i - 1]]


def image_upper_density(
    f: CatalogFunction,
    level: int,
    D: SubsetOfNaturals,
    horizon: int,
) -> float:
    """Natural-density estimate of B = {D^level floor(f)(n) : n in D}.

    Computes |B intersect [1, K]| / K on a geometric ladder of K up to the
    largest attained value and returns the max over the ladder tail (a
    limsup proxy).
    """
    members = D.members
    if members is None:
        ns = np.arange(1, horizon + 1, dtype=np.int64)
        members = ns[D.indicator_values(ns) > 0.5]
    members = members[(members >= max(1, f.domain_start)) & (members <= horizon)]
    if members.size == 0:
        return 0.0
    g = floor_sequence(f)
    dg = delta_integer(g, level)
    image = np.unique(dg.values(members))
    image = image[image >= 1]
    if image.size == 0:
        return 0.0
    K_max = int(image.max())
    ladder = _geometric_ladder(16, K_max)
    counts = np.searchsorted(image, ladder, side="right")
    ratios = [c / K for c, K in zip(counts, ladder)]
    tail = ratios[len(ratios) - max(1, len(ratios) // 3):]
    return float(max(tail))
