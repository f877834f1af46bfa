"""Fixed-point money arithmetic.

Cost files and reports use a display unit (nominally $1,000). Internally
every amount is an integer number of thousandths of that unit so that value
comparisons made during search are exact and reproducible. Probabilities stay
floating point; only the money ledger is fixed point.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Union

Money = int

# thousandths of the display unit per display unit
SCALE = 1000


class MoneyError(ValueError):
    pass


def from_display(value: Union[int, float, str, Fraction]) -> Money:
    """Parse an amount given in display units into fixed point.

    Floats are interpreted through their shortest decimal repr, so JSON
    values like 1.11 mean exactly 111/100.
    """
    if isinstance(value, bool):
        raise MoneyError(f"not a money amount: {value!r}")
    if isinstance(value, int):
        return value * SCALE
    if isinstance(value, float):
        frac = Fraction(str(value))
    elif isinstance(value, (str, Fraction)):
        frac = Fraction(value)
    else:
        raise MoneyError(f"not a money amount: {value!r}")
    scaled = frac * SCALE
    if scaled.denominator != 1:
        raise MoneyError(f"amount {value!r} is finer than the fixed-point grid")
    return int(scaled)


def to_display(amount: Money) -> float:
    """Fixed point back to display units (exact when representable)."""
    return amount / SCALE


def round_display(value: float) -> Money:
    """Round a floating display-unit amount onto the fixed-point grid."""
    return round(value * SCALE)


def scale_by(amount: Money, factor: Fraction) -> Money:
    """Multiply by an exact rational factor, rounding half-even to the grid."""
    return round(amount * factor)


def parse_fraction(value: Union[int, float, str]) -> Fraction:
    """Exact rational from a JSON number, via the shortest decimal repr."""
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)
