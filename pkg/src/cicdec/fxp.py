"""Two's-complement words with hardware semantics.

All arithmetic is modular in the word width: adders wrap, truncation is an
arithmetic right shift (floor toward minus infinity), and widening is sign
extension.  Words are immutable values.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError

MAX_WIDTH = 64


def wrap_int(value: int, width: int) -> int:
    """Reduce ``value`` modulo ``2**width`` into the signed range."""
    half = 1 << (width - 1)
    return ((value + half) & ((1 << width) - 1)) - half


def to_unsigned(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


def to_signed(pattern: int, width: int) -> int:
    pattern &= (1 << width) - 1
    if pattern >> (width - 1):
        return pattern - (1 << width)
    return pattern


def signed_range(width: int) -> tuple[int, int]:
    return -(1 << (width - 1)), (1 << (width - 1)) - 1


def _check_width(width: int) -> None:
    if not isinstance(width, int) or not 1 <= width <= MAX_WIDTH:
        raise ConfigurationError(f"word width must be in [1, {MAX_WIDTH}], got {width!r}")


@dataclass(frozen=True)
class Word:
    """A ``width``-bit two's-complement register value."""

    value: int
    width: int

    def __post_init__(self):
        _check_width(self.width)
        lo, hi = signed_range(self.width)
        if not lo <= self.value <= hi:
            raise ConfigurationError(
                f"value {self.value} does not fit a signed {self.width}-bit word"
            )

    @classmethod
    def wrapped(cls, value: int, width: int) -> Word:
        """Build a word from any integer by modular reduction."""
        _check_width(width)
        return cls(wrap_int(value, width), width)

    @property
    def bits(self) -> int:
        """Raw unsigned bit pattern."""
        return to_unsigned(self.value, self.width)

    def __int__(self):
        return self.value


def _same_width(a: Word, b: Word) -> int:
    if a.width != b.width:
        raise ConfigurationError(f"width mismatch: {a.width} vs {b.width}; resize explicitly")
    return a.width


def wrap_add(a: Word, b: Word) -> Word:
    w = _same_width(a, b)
    return Word(wrap_int(a.value + b.value, w), w)


def wrap_sub(a: Word, b: Word) -> Word:
    w = _same_width(a, b)
    return Word(wrap_int(a.value - b.value, w), w)


def truncate_lsb(a: Word, new_width: int) -> Word:
    """Keep the top ``new_width`` bits of ``a`` (floor division by a power of two)."""
    _check_width(new_width)
    if new_width > a.width:
        raise ConfigurationError(
            f"cannot truncate a {a.width}-bit word to {new_width} bits; use sign_extend"
        )
    return Word(a.value >> (a.width - new_width), new_width)


def sign_extend(a: Word, new_width: int) -> Word:
    _check_width(new_width)
    if new_width < a.width:
        raise ConfigurationError(
            f"cannot sign-extend a {a.width}-bit word to {new_width} bits; use truncate_lsb"
        )
    return Word(a.value, new_width)
