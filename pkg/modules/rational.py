"""
rational.py
-----------
Exact rational plumbing shared by every construction: parsing, canonical
formatting, logarithms of huge rationals, intervals and max-metric boxes.

Usage:
    from modules.rational import parse_rational, Interval
    eps = parse_rational("1/9")
"""

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Tuple, Union

from modules.exceptions import DomainError, InvalidParameterError

Rational = Fraction
RationalLike = Union[Fraction, int, str]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(value: RationalLike, name: str = "value") -> Fraction:
    """
    FUNCTION: parse_rational

    DESCRIPTION:
    Converts an integer or a "p/q" string to a Fraction. Float literals are
    refused: map-defining parameters must be exact.

    RAISES:
    InvalidParameterError : float input, malformed text or zero denominator.
    """
    if isinstance(value, bool):
        raise InvalidParameterError(f"{name}: booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise InvalidParameterError(f"{name}: float {value!r} refused, use 'p/q'")
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if not match:
            raise InvalidParameterError(f"{name}: {value!r} is not an integer or 'p/q' rational")
        numerator = int(match.group(1))
        denominator = int(match.group(2)) if match.group(2) is not None else 1
        if denominator == 0:
            raise InvalidParameterError(f"{name}: zero denominator in {value!r}")
        return Fraction(numerator, denominator)
    raise InvalidParameterError(f"{name}: unsupported type {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def log_rational(q: Union[Fraction, int]) -> float:
    """Natural log of a positive rational, exact up to the final float rounding."""
    q = Fraction(q)
    if q <= 0:
        raise InvalidParameterError(f"log of non-positive rational {format_rational(q)}")
    return math.log(q.numerator) - math.log(q.denominator)


def rational_power(base: int, exponent: Fraction) -> Fraction:
    """base**exponent, exact for integer exponents, best rational approximation otherwise."""
    exponent = Fraction(exponent)
    if exponent.denominator == 1:
        return Fraction(base) ** int(exponent)
    approx = Fraction(math.exp(float(exponent) * math.log(base)))
    return approx.limit_denominator(10**12)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{format_rational(self.lo)}, {format_rational(self.hi)}]")

    @classmethod
    def of(cls, lo: RationalLike, hi: RationalLike) -> "Interval":
        return cls(parse_rational(lo, "lo"), parse_rational(hi, "hi"))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def interior_contains(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def interiors_disjoint(self, other: "Interval") -> bool:
        return self.hi <= other.lo or other.hi <= self.lo

    def as_strings(self) -> Tuple[str, str]:
        return format_rational(self.lo), format_rational(self.hi)


@dataclass(frozen=True)
class Box:
    """Product of intervals under the max metric."""
    sides: Tuple[Interval, ...]

    @classmethod
    def of(cls, sides: Iterable[Interval]) -> "Box":
        return cls(tuple(sides))

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def width(self) -> Fraction:
        return max(side.width for side in self.sides)

    def contains(self, point: Tuple[Fraction, ...]) -> bool:
        return len(point) == self.dim and all(s.contains(x) for s, x in zip(self.sides, point))
