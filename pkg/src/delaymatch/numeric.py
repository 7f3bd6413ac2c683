"""Number handling: exact rationals by default, floats when inputs demand it.

Every quantity in the package is either a Fraction (covers ints) or a float,
never a mix within one simulation.  Files carry numbers as strings: exact
values as decimal strings when the denominator is 2^a*5^b, as "p/q" otherwise,
and float values as their shortest round-tripping repr.
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, Fraction, float]

# Fill detection threshold for float-mode simulations.
FILL_EPS = 1e-12

# Slack granted to inequality audits when any input is a float.
FLOAT_TOL = 1e-9


def is_exact(x: Number) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(xs: Iterable[Number]) -> bool:
    return all(is_exact(x) for x in xs)


def as_fraction(x: Number) -> Fraction:
    """Exact conversion; floats convert via their binary expansion."""
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def parse_number(s: str, *, want_float: bool = False) -> Number:
    """Parse a serialized number: decimal string, "p/q", or float repr."""
    s = s.strip()
    if want_float:
        return float(s)
    if "/" in s:
        num, _, den = s.partition("/")
        return Fraction(int(num), int(den))
    try:
        return Fraction(Decimal(s))
    except ArithmeticError as exc:  # InvalidOperation subclasses this
        raise ValueError(f"not a number: {s!r}") from exc


def _decimal_str(fr: Fraction) -> str | None:
    """Finite decimal form of fr, or None if its denominator is not 2^a*5^b."""
    den = fr.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    shift = max(twos, fives)
    scaled = fr.numerator * 10**shift // fr.denominator
    if shift == 0:
        return str(scaled)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(shift + 1, "0")
    whole, frac = digits[:-shift], digits[-shift:]
    return f"{sign}{whole}.{frac}"


def format_number(x: Number) -> str:
    if isinstance(x, bool):
        raise TypeError("bool is not a number here")
    if isinstance(x, float):
        return repr(x)
    fr = as_fraction(x)
    dec = _decimal_str(fr)
    return dec if dec is not None else f"{fr.numerator}/{fr.denominator}"


def le_with_tol(lhs: Number, rhs: Number, exact: bool) -> bool:
    """lhs <= rhs, with absolute float slack when the run was not exact."""
    if exact:
        return lhs <= rhs
    return float(lhs) <= float(rhs) + FLOAT_TOL
