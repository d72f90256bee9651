"""Exact integer arithmetic for floors of rational powers.

floor(b * n^(p/q)) for rational b and p/q reduces to an integer q-th root,
so these floors never touch floating point.  Integer combinations
sum_t c_t * b * (n+t)^(p/q) are floored exactly by splitting each term into
its rational part and a q-th-power-free kernel: q-th roots of distinct
q-free kernels are linearly independent over Q, so the combination is
rational exactly when every kernel coefficient cancels, and otherwise an
escalating-precision enclosure decides the floor in finitely many steps.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

_MAX_PREC_BITS = 4096


def integer_root(x: int, k: int) -> tuple[int, bool]:
    """(floor(x^(1/k)), exact?) for x >= 0, k >= 1, pure integer Newton."""
    if k < 1:
        raise ValueError("root order must be >= 1")
    if x < 0:
        raise ValueError("negative radicand")
    if k == 1:
        return x, True
    if k == 2:
        r = math.isqrt(x)
        return r, r * r == x
    if x in (0, 1):
        return x, True
    r = 1 << ((x.bit_length() + k - 1) // k + 1)
    while True:
        nr = ((k - 1) * r + x // r ** (k - 1)) // k
        if nr >= r:
            break
        r = nr
    while r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r, r**k == x


def root_floor_fraction(radicand: int, q: int) -> tuple[int, float]:
    """(floor, fractional part) of radicand^(1/q), frac accurate to ~1e-15 absolute.

    The integer part comes from the exact integer root; the fractional part
    is the well-conditioned quotient

        delta = (radicand - r^q) / sum_j s^j r^(q-1-j),   s ~ radicand^(1/q),

    whose numerator is exact integer cancellation and whose denominator is
    large, so no catastrophic subtraction ever happens in floats.
    """
    r, exact = integer_root(radicand, q)
    if exact:
        return r, 0.0
    d = float(radicand - r**q)
    rf = float(r)
    s = float(radicand) ** (1.0 / q) if q > 2 else math.sqrt(float(radicand))
    denom = math.fsum(s**j * rf ** (q - 1 - j) for j in range(q))
    delta = d / denom
    return r, min(max(delta, 0.0), math.nextafter(1.0, 0.0))


def sqrt_floor_fraction_vector(radicands) -> tuple:
    """Vectorized (floor, frac) of square roots of an int64 array."""
    rad = np.asarray(radicands, dtype=np.int64)
    s = np.sqrt(rad.astype(np.float64))
    r = np.floor(s).astype(np.int64)
    for _ in range(2):
        r = np.where(r > 0, np.where(r * r > rad, r - 1, r), 0)
        r = np.where((r + 1) * (r + 1) <= rad, r + 1, r)
    d = (rad - r * r).astype(np.float64)
    delta = d / np.maximum(r.astype(np.float64) + s, 1.0)
    delta = np.where(d == 0.0, 0.0, np.clip(delta, 0.0, np.nextafter(1.0, 0.0)))
    return r, delta


def _factorize(m: int) -> dict[int, int]:
    """Prime factorization by trial division; intended for m up to ~10^14."""
    if m <= 0:
        raise ValueError("factorization needs m >= 1")
    out: dict[int, int] = {}
    rest = m
    p = 2
    while p * p <= rest:
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            out[p] = e
        p += 1 if p == 2 else 2
    if rest > 1:
        out[rest] = out.get(rest, 0) + 1
    return out


def _power_free_kernel(m: int, p: int, q: int) -> tuple[int, int]:
    """Write m^p = s^q * kernel with kernel q-th-power-free; return (s, kernel)."""
    s = 1
    kernel = 1
    for prime, e in _factorize(m).items():
        pe = p * e
        s *= prime ** (pe // q)
        kernel *= prime ** (pe % q)
    return s, kernel


def floor_rational_power_combination(
    coeffs: dict[int, int],
    n: int,
    b: Fraction,
    p: int,
    q: int,
    start_prec: int = 120,
) -> int:
    """floor(sum_t c_t * b * (n+t)^(p/q)) exactly.

    Terms are grouped by the q-free kernel of (n+t)^p.  If every kernel
    coefficient cancels, the value is rational and floored exactly;
    otherwise the irrational remainder is nonzero, so an mpmath enclosure
    of escalating precision separates it from the nearest integer.
    """
    if q == 1:
        total = sum(Fraction(c) * b * (n + t) ** p for t, c in coeffs.items())
        return total.numerator // total.denominator

    rational = Fraction(0)
    kernels: dict[int, Fraction] = {}
    for t, c in coeffs.items():
        if c == 0:
            continue
        m = n + t
        if m == 0:
            continue
        s, kernel = _power_free_kernel(m, p, q)
        if kernel == 1:
            rational += Fraction(c) * b * s
        else:
            kernels[kernel] = kernels.get(kernel, Fraction(0)) + Fraction(c) * b * s
    kernels = {k: v for k, v in kernels.items() if v != 0}
    if not kernels:
        return rational.numerator // rational.denominator

    prec = start_prec
    while prec <= _MAX_PREC_BITS:
        with mpmath.workprec(prec):
            acc = mpmath.mpf(rational.numerator) / rational.denominator
            err = mpmath.mpf(2) ** (8 - prec)
            for kernel, coef in kernels.items():
                root = mpmath.root(kernel, q)
                term = root * coef.numerator / coef.denominator
                acc += term
                err += abs(term) * mpmath.mpf(2) ** (4 - prec)
            lo = mpmath.floor(acc - err)
            hi = mpmath.floor(acc + err)
            if lo == hi:
                return int(lo)
        prec *= 2
    raise OverflowError(
        "could not separate the combination from an integer at 4096 bits"
    )
