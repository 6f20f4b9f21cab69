"""Exact-rational helpers: money and rates never touch floats internally."""

from __future__ import annotations

from fractions import Fraction


def fraction_str(value: Fraction) -> str:
    """Serialize exactly, e.g. Fraction(41, 2600) -> "41/2600"."""
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str | int | float) -> Fraction:
    """Parse "p/q", decimal strings, or numbers into an exact Fraction."""
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    return Fraction(text.strip())


def format_usd(value: Fraction, places: int = 2) -> str:
    """Render a dollar amount, rounding half-up only at display time."""
    quantum = Fraction(1, 10**places)
    units = (value / quantum + Fraction(1, 2)).__floor__()
    sign = "-" if units < 0 else ""
    units = abs(units)
    whole, frac = divmod(units, 10**places)
    return f"{sign}${whole}.{frac:0{places}d}"


def format_pct(rate: Fraction | None, places: int = 2) -> str:
    """Render a 0..1 rate as a percentage; None means not applicable."""
    if rate is None:
        return "n/a"
    quantum = Fraction(1, 10**places)
    units = (rate * 100 / quantum + Fraction(1, 2)).__floor__()
    sign = "-" if units < 0 else ""
    units = abs(units)
    whole, frac = divmod(units, 10**places)
    return f"{sign}{whole}.{frac:0{places}d}%"
