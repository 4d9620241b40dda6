"""Exact integer/rational helpers and a small log2-space value type.

Python integers are already arbitrary precision and ``fractions.Fraction``
keeps rationals in lowest terms, so this module only adds what they lack:
argument-checked binomials, exact decimal rendering with round-half-even at a
significant-figure count, and base-2 logarithmic magnitudes for trees whose
counts are too large to keep exactly.
"""

from __future__ import annotations

import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Log2Value",
    "binomial",
    "central_binomial_ratio",
    "exact_str",
    "int_str",
    "log2_add",
    "parse_int",
    "pow2",
    "to_decimal",
]

_LOG10_2 = math.log10(2)


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient C(n, k).

    Raises ``ValueError`` when ``k`` is outside ``[0, n]``.
    """
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"binomial({n}, {k}) requires 0 <= k <= n")
    # math.comb splits the product recursively; C(70000, 35000) is well under a second.
    return math.comb(n, k)


def pow2(e: int) -> int:
    if e < 0:
        raise ValueError("pow2 takes a nonnegative exponent")
    return 1 << e


def central_binomial_ratio(n: int) -> Fraction:
    """C(n-1, floor((n-1)/2)) / 2^(n-1) for ``n >= 1``."""
    if n < 1:
        raise ValueError("need at least one voter")
    m = n - 1
    return Fraction(binomial(m, m // 2), pow2(m))


def to_decimal(value: Fraction | int, sig: int = 6) -> str:
    """Render ``value`` in fixed-point notation with ``sig`` significant figures.

    Rounding is half-to-even on the exact rational, so the result is the
    correctly rounded decimal and is identical on every platform.

    >>> to_decimal(Fraction(1, 2), 6)
    '0.500000'
    >>> to_decimal(Fraction(2, 3), 3)
    '0.667'
    """
    if sig < 1:
        raise ValueError("sig must be >= 1")
    value = Fraction(value)
    if value < 0:
        return "-" + to_decimal(-value, sig)
    if value == 0:
        return "0." + "0" * (sig - 1) if sig > 1 else "0"
    num, den = value.numerator, value.denominator
    k = _shift_for(num, den, sig)
    digits = _round_half_even(num, den, k)
    if digits == 10**sig:
        # rounding carried into a new decade
        k -= 1
        digits = _round_half_even(num, den, k)
    return _place_point(str(digits), k)


def _shift_for(num: int, den: int, sig: int) -> int:
    # value * 10^k lies in [10^(sig-1), 10^sig)
    est = (num.bit_length() - den.bit_length()) * _LOG10_2
    k = sig - 1 - int(math.floor(est))
    lo, hi = 10 ** (sig - 1), 10**sig
    while True:
        n, d = (num * 10**k, den) if k >= 0 else (num, den * 10 ** (-k))
        if n < lo * d:
            k += 1
        elif n >= hi * d:
            k -= 1
        else:
            return k


def _round_half_even(num: int, den: int, k: int) -> int:
    n, d = (num * 10**k, den) if k >= 0 else (num, den * 10 ** (-k))
    q, r = divmod(n, d)
    twice = 2 * r
    if twice > d or (twice == d and q % 2 == 1):
        q += 1
    return q


def _place_point(digits: str, k: int) -> str:
    # the rendered number is int(digits) * 10^(-k)
    if k <= 0:
        return digits + "0" * (-k)
    if k >= len(digits):
        return "0." + "0" * (k - len(digits)) + digits
    return digits[:-k] + "." + digits[-k:]


@dataclass(frozen=True)
class Log2Value:
    """A nonnegative magnitude kept as ``mantissa * 2**exponent``.

    ``mantissa`` is a double in ``[0.5, 1)`` (or 0 for the value zero) and
    ``exponent`` an unbounded int, so magnitudes far beyond the double range
    survive and any integer up to 2**53 converts back exactly.
    """

    mantissa: float
    exponent: int = 0

    @classmethod
    def of(cls, x: int | float | Fraction) -> "Log2Value":
        if x < 0:
            raise ValueError("Log2Value holds nonnegative magnitudes only")
        if x == 0:
            return cls(0.0, 0)
        if isinstance(x, Fraction):
            return cls.of(x.numerator) / cls.of(x.denominator)
        if isinstance(x, int) and x.bit_length() > 1000:
            shift = x.bit_length() - 64
            x, extra = x >> shift, shift
        else:
            extra = 0
        m, e = math.frexp(float(x))
        return cls(m, e + extra)

    @classmethod
    def from_log2(cls, log2: float) -> "Log2Value":
        whole = math.floor(log2)
        m, e = math.frexp(2.0 ** (log2 - whole))
        return cls(m, e + int(whole))

    @property
    def zero(self) -> bool:
        return self.mantissa == 0.0

    @property
    def log2(self) -> float:
        if self.zero:
            return -math.inf
        return math.log2(self.mantissa) + self.exponent

    def value(self) -> float:
        return math.ldexp(self.mantissa, self.exponent)

    def to_int(self) -> int:
        if self.zero:
            return 0
        # mantissa carries 53 bits; shift them into place as an exact int
        bits = int(math.ldexp(self.mantissa, 53))
        shift = self.exponent - 53
        return bits << shift if shift >= 0 else round(Fraction(bits, 1 << -shift))

    def __mul__(self, other: "Log2Value") -> "Log2Value":
        if self.zero or other.zero:
            return Log2Value(0.0, 0)
        m, e = math.frexp(self.mantissa * other.mantissa)
        return Log2Value(m, e + self.exponent + other.exponent)

    def __truediv__(self, other: "Log2Value") -> "Log2Value":
        if other.zero:
            raise ZeroDivisionError("division by a zero Log2Value")
        if self.zero:
            return self
        m, e = math.frexp(self.mantissa / other.mantissa)
        return Log2Value(m, e + self.exponent - other.exponent)

    def __add__(self, other: "Log2Value") -> "Log2Value":
        return log2_add(self, other)


def log2_add(a: Log2Value, b: Log2Value) -> Log2Value:
    """Sum of two magnitudes without leaving log space."""
    if a.zero:
        return b
    if b.zero:
        return a
    hi, lo = (a, b) if a.exponent >= b.exponent else (b, a)
    gap = hi.exponent - lo.exponent
    if gap > 1100:
        return hi
    m, e = math.frexp(hi.mantissa + math.ldexp(lo.mantissa, -gap))
    return Log2Value(m, e + hi.exponent)


@contextmanager
def _unlimited_digits():
    # CPython caps int<->str conversion at 4300 digits by default
    get = getattr(sys, "get_int_max_str_digits", None)
    if get is None:
        yield
        return
    old = get()
    sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        sys.set_int_max_str_digits(old)


def int_str(n: int) -> str:
    """Decimal string of ``n`` with no digit limit."""
    with _unlimited_digits():
        return str(n)


def parse_int(text: str) -> int:
    with _unlimited_digits():
        return int(text)


def exact_str(value: Fraction) -> str:
    """``"num/den"`` for a reduced fraction."""
    return f"{int_str(value.numerator)}/{int_str(value.denominator)}"
