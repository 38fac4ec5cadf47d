"""Exact rational arithmetic helpers.

All solver-facing numbers are exact rationals so that classification
thresholds, LP pivots and overshoot bounds compare exactly.  gmpy2.mpq is
used when available (an order of magnitude faster than fractions.Fraction);
the two types interoperate, so callers may pass either.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq

    def rat(num, den=None):
        if den is None:
            if isinstance(num, float):
                return _mpq(Fraction(num))
            return _mpq(num)
        return _mpq(num, den)

    HAVE_GMPY = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def rat(num, den=None):
        if den is None:
            return Fraction(num)
        return Fraction(num, den)

    HAVE_GMPY = False

ZERO = rat(0)
ONE = rat(1)


def parse_rational(value) -> "rat":
    """Parse ints, 'a/b' strings, floats (exactly) and Fractions."""
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return rat(int(num), int(den))
        return rat(int(text))
    if isinstance(value, float):
        return rat(Fraction(value))
    return rat(value)


def rat_str(value) -> str:
    """Canonical 'a/b' (or plain integer) rendering."""
    value = rat(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def rat_floor(value) -> int:
    """Exact floor of a rational."""
    value = rat(value)
    return value.numerator // value.denominator


def rat_ceil(value) -> int:
    value = rat(value)
    return -((-value.numerator) // value.denominator)


def is_integral(value) -> bool:
    return rat(value).denominator == 1
