import re
from argparse import ArgumentTypeError
from fractions import Fraction
from typing import Callable

_POWER = re.compile(r"^\s*(\d+)\s*\^\s*(\d+)\s*$")


def parse_count(text: str) -> int:
    """Positive integer written plainly, as ``10^7`` or as ``1e7``."""
    match = _POWER.match(text)
    try:
        if match:
            value = int(match.group(1)) ** int(match.group(2))
        else:
            number = float(text) if any(c in text for c in ".eE") else int(text)
            value = int(number)
            if value != number:
                raise ValueError
    except (ValueError, OverflowError):
        raise ArgumentTypeError(f"{text!r} is not a whole number")
    if value < 1:
        raise ArgumentTypeError(f"{text!r} must be at least 1")
    return value


def parse_nonnegative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ArgumentTypeError(f"{text!r} is not an integer")
    if value < 0:
        raise ArgumentTypeError(f"{text!r} must be nonnegative")
    return value


def parse_positive(text: str) -> float:
    try:
        value = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ArgumentTypeError(f"{text!r} is not a number")
    if value <= 0:
        raise ArgumentTypeError(f"{text!r} must be positive")
    return value


def bounded(parse: Callable[[str], int], high: int) -> Callable[[str], int]:
    """Wrap an integer parser with an upper limit, keeping its name for --help."""

    def _parse(text: str) -> int:
        value = parse(text)
        if value > high:
            raise ArgumentTypeError(f"{text!r} exceeds {high}")
        return value

    _parse.__name__ = parse.__name__
    return _parse
