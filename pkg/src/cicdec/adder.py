"""Gate-level adder models: ripple carry, 4-bit lookahead, chained MCLA.

Operands are LSB-first bit lists.  Every carry and sum bit is produced by
explicit AND/OR/XOR expressions so the structure, not Python's ``+``,
determines the result.  Signed interpretation lives in :mod:`cicdec.fxp`;
two's-complement addition is the same bit function.

Gate-depth model
----------------
Every XOR, AND and OR counts one level; a k-input AND or OR counts
``ceil(log2 k)`` levels.  A full adder in the ripple chain costs two levels
on the carry path, so ``ripple = 2 * W``.  The MCLA path is::

    PG_DEPTH                 p_i, g_i from the operand bits
  + GROUP_DEPTH              4-input AND feeding 4-input OR for G_G
  + ceil(W/4) * LINK_DEPTH   c_next = G_G + P_G * c_in, one group at a time
  + SUM_DEPTH                s_i = p_i XOR c_i
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigurationError

PG_DEPTH = 1
GROUP_DEPTH = 4
LINK_DEPTH = 2
SUM_DEPTH = 1
RIPPLE_STAGE_DEPTH = 2

ADDER_KINDS = ("ripple", "mcla")


def _wide(k: int) -> int:
    """Depth of a k-input AND/OR tree."""
    return max(1, math.ceil(math.log2(k))) if k > 1 else 0


assert GROUP_DEPTH == _wide(4) + _wide(4)


@dataclass(frozen=True)
class BitVector:
    """Binary digits, least significant first."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not self.bits:
            raise ConfigurationError("a BitVector needs at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise ConfigurationError("bits must be 0 or 1")

    @classmethod
    def from_int(cls, value: int, width: int) -> BitVector:
        if width < 1:
            raise ConfigurationError("width must be >= 1")
        value &= (1 << width) - 1
        return cls(tuple((value >> i) & 1 for i in range(width)))

    @property
    def width(self) -> int:
        return len(self.bits)

    def to_int(self) -> int:
        out = 0
        for i, b in enumerate(self.bits):
            out |= b << i
        return out

    def __getitem__(self, i):
        return self.bits[i]

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class AdderResult:
    sum: BitVector
    carry_out: int
    gate_depth: int

    @property
    def value(self) -> int:
        return self.sum.to_int()


def _as_bits(x, width=None) -> BitVector:
    if isinstance(x, BitVector):
        return x
    if isinstance(x, int):
        if width is None:
            raise ConfigurationError("integer operands need an explicit width")
        return BitVector.from_int(x, width)
    return BitVector(tuple(x))


def propagate_generate(a: int, b: int) -> tuple[int, int]:
    """Bit-level propagate (XOR) and generate (AND)."""
    return a ^ b, a & b


def group_pg(p: Sequence[int], g: Sequence[int]) -> tuple[int, int]:
    """Group propagate and generate of a 4-bit block (LSB first)."""
    if len(p) != 4 or len(g) != 4:
        raise ConfigurationError("group_pg takes exactly four (p, g) pairs")
    p0, p1, p2, p3 = p
    g0, g1, g2, g3 = g
    pg = p3 & p2 & p1 & p0
    gg = g3 | (p3 & g2) | (p3 & p2 & g1) | (p3 & p2 & p1 & g0)
    return pg, gg


def lookahead_carries(p: Sequence[int], g: Sequence[int], c0: int) -> tuple[int, int, int, int]:
    """Carries c1..c4 of a 4-bit block, each a two-level AND-OR of p, g, c0."""
    p0, p1, p2, p3 = p
    g0, g1, g2, g3 = g
    c1 = g0 | (p0 & c0)
    c2 = g1 | (p1 & g0) | (p1 & p0 & c0)
    c3 = g2 | (p2 & g1) | (p2 & p1 & g0) | (p2 & p1 & p0 & c0)
    c4 = (g3 | (p3 & g2) | (p3 & p2 & g1) | (p3 & p2 & p1 & g0)
          | (p3 & p2 & p1 & p0 & c0))
    return c1, c2, c3, c4


def cla4(a, b, c0: int = 0) -> AdderResult:
    """One 4-bit carry-lookahead block."""
    a = _as_bits(a, 4)
    b = _as_bits(b, 4)
    if a.width != 4 or b.width != 4:
        raise ConfigurationError("cla4 operands must be 4 bits wide")
    p, g = zip(*(propagate_generate(x, y) for x, y in zip(a.bits, b.bits)))
    carries = (c0,) + lookahead_carries(p, g, c0)
    s = tuple(p[i] ^ carries[i] for i in range(4))
    return AdderResult(BitVector(s), carries[4], critical_path_depth("mcla", 4))


def mcla(a, b, c0: int = 0, width: int | None = None) -> AdderResult:
    """Chained 4-bit lookahead groups.

    Each group's carry-in comes from the previous group through
    ``c_next = G_G + P_G * c_in``.  A width that is not a multiple of four
    leaves a short top group, padded with zero operand bits; its carry-out
    is the internal lookahead carry at its true top bit.
    """
    a = _as_bits(a, width)
    b = _as_bits(b, width)
    if a.width != b.width:
        raise ConfigurationError(f"operand width mismatch: {a.width} vs {b.width}")
    w = a.width
    s = []
    c = c0
    for base in range(0, w, 4):
        r = min(4, w - base)
        p = [0, 0, 0, 0]
        g = [0, 0, 0, 0]
        for i in range(r):
            p[i], g[i] = propagate_generate(a.bits[base + i], b.bits[base + i])
        carries = (c,) + lookahead_carries(p, g, c)
        for i in range(r):
            s.append(p[i] ^ carries[i])
        if r == 4:
            pg, gg = group_pg(p, g)
            c = gg | (pg & c)
        else:
            c = carries[r]
    return AdderResult(BitVector(tuple(s)), c, critical_path_depth("mcla", w))


def ripple_add(a, b, c0: int = 0, width: int | None = None) -> AdderResult:
    a = _as_bits(a, width)
    b = _as_bits(b, width)
    if a.width != b.width:
        raise ConfigurationError(f"operand width mismatch: {a.width} vs {b.width}")
    s = []
    c = c0
    for x, y in zip(a.bits, b.bits):
        p, g = propagate_generate(x, y)
        s.append(p ^ c)
        c = g | (p & c)
    return AdderResult(BitVector(tuple(s)), c, critical_path_depth("ripple", a.width))


def critical_path_depth(kind: str, width: int) -> int:
    """Critical-path gate depth of a ``width``-bit adder of the given kind."""
    if width < 1:
        raise ConfigurationError("width must be >= 1")
    if kind == "ripple":
        return RIPPLE_STAGE_DEPTH * width
    if kind == "mcla":
        return PG_DEPTH + GROUP_DEPTH + math.ceil(width / 4) * LINK_DEPTH + SUM_DEPTH
    raise ConfigurationError(f"unknown adder kind {kind!r}; expected one of {ADDER_KINDS}")


ADDERS = {"ripple": ripple_add, "mcla": mcla}


def add_words(kind: str, a: int, b: int, c0: int, width: int) -> tuple[int, int]:
    """Unsigned ``a + b + c0`` through the named gate model; returns (sum, carry)."""
    try:
        fn = ADDERS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown adder kind {kind!r}") from None
    res = fn(a, b, c0, width=width)
    return res.value, res.carry_out
