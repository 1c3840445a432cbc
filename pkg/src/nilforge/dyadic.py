from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction

import numpy as np

from .util.errors import LevelOverflow, ParseError

MAX_LEVEL = 62

_TEXT = re.compile(r'^\s*(-?\d+)\s*(?:/\s*(?:2\^(\d+)|(\d+)))?\s*$')


class DyadicTorus:
    """An element num/2^level of the dyadic subgroup (1/2^level)Z/Z of the torus.

    Instances are always canonical: the level is minimal, so the numerator is
    odd unless the element is zero, in which case the level is 0.
    """

    __slots__ = ('_num', '_level')

    def __init__(self, num: int = 0, level: int = 0) -> None:
        if level < 0:
            raise ValueError(f'negative level {level}')
        if level > MAX_LEVEL:
            raise LevelOverflow(f'level {level} exceeds {MAX_LEVEL}')
        num = int(num) % (1 << level)
        if num == 0:
            level = 0
        else:
            tz = (num & -num).bit_length() - 1
            num >>= tz
            level -= tz
        self._num = num
        self._level = level

    @property
    def numerator(self) -> int:
        return self._num

    @property
    def level(self) -> int:
        return self._level

    @classmethod
    def zero(cls) -> DyadicTorus:
        return cls(0, 0)

    @classmethod
    def half(cls) -> DyadicTorus:
        return cls(1, 1)

    @classmethod
    def parse(cls, text: str) -> DyadicTorus:
        """Accepts "3/8", "3/2^3", "0" and "5"."""
        m = _TEXT.match(text)
        if not m:
            raise ParseError(f'not a dyadic torus element: {text!r}')
        num = int(m.group(1))
        if m.group(2) is not None:
            return cls(num, int(m.group(2)))
        if m.group(3) is not None:
            den = int(m.group(3))
            if den <= 0 or den & (den - 1):
                raise ParseError(f'denominator {den} is not a power of two')
            return cls(num, den.bit_length() - 1)
        return cls(0, 0)

    def at_level(self, level: int) -> int:
        """Numerator of this element written over 2^level."""
        if level < self._level:
            raise ValueError(f'{self} does not lie in level {level}')
        return self._num << (level - self._level)

    def halve(self) -> DyadicTorus:
        """The distinguished square root num/2^(level+1); twice it is self."""
        return DyadicTorus(self._num, self._level + 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self._num, 1 << self._level)

    def e_phase(self) -> complex:
        return e_phase(self)

    def _coerce(self, other) -> DyadicTorus:
        if isinstance(other, DyadicTorus):
            return other
        if isinstance(other, (int, np.integer)):
            # integers are zero in the torus
            return _ZERO
        return NotImplemented

    def __add__(self, other) -> DyadicTorus:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        level = max(self._level, other._level)
        return DyadicTorus(self.at_level(level) + other.at_level(level), level)

    def __radd__(self, other) -> DyadicTorus:
        return self.__add__(other)

    def __neg__(self) -> DyadicTorus:
        return DyadicTorus(-self._num, self._level)

    def __sub__(self, other) -> DyadicTorus:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> DyadicTorus:
        return (-self).__add__(other)

    def __mul__(self, other) -> DyadicTorus:
        if isinstance(other, (int, np.integer)):
            return DyadicTorus(self._num * int(other), self._level)
        return NotImplemented

    def __rmul__(self, other) -> DyadicTorus:
        return self.__mul__(other)

    def __eq__(self, other) -> bool:
        if isinstance(other, DyadicTorus):
            return self._num == other._num and self._level == other._level
        if isinstance(other, (int, np.integer)):
            return self._num == 0
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._num, self._level))

    def __bool__(self) -> bool:
        return self._num != 0

    def __repr__(self) -> str:
        return f'DyadicTorus({self._num}, {self._level})'

    def __str__(self) -> str:
        if self._num == 0:
            return '0'
        return f'{self._num}/{1 << self._level}'


_ZERO = DyadicTorus(0, 0)


class Z4:
    """An element of Z/4Z."""

    __slots__ = ('value',)

    def __init__(self, value: int = 0) -> None:
        self.value = int(value) % 4

    def __add__(self, other) -> Z4:
        return Z4(self.value + int(other))

    __radd__ = __add__

    def __sub__(self, other) -> Z4:
        return Z4(self.value - int(other))

    def __neg__(self) -> Z4:
        return Z4(-self.value)

    def __mul__(self, other) -> Z4:
        return Z4(self.value * int(other))

    __rmul__ = __mul__

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __eq__(self, other) -> bool:
        if isinstance(other, (Z4, int, np.integer)):
            return self.value == int(other) % 4
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)

    def __repr__(self) -> str:
        return f'Z4({self.value})'


def canonicalize(num: int, level: int) -> DyadicTorus:
    return DyadicTorus(num, level)


def add(a: DyadicTorus, b: DyadicTorus) -> DyadicTorus:
    return a + b


def neg(a: DyadicTorus) -> DyadicTorus:
    return -a


def lift_level(a: DyadicTorus, level: int) -> int:
    """Image of `a` under the embedding into level `level`, as a numerator."""
    return a.at_level(level)


def binom2(a) -> int:
    """The map n -> binom(n, 2) mod 2, well defined on Z/4Z."""
    return (int(a) >> 1) & 1


def binom2_array(a: np.ndarray) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) >> 1) & 1


def e_phase(a: DyadicTorus) -> complex:
    if a.level <= 2:
        # exact on the quarter circle
        return _QUARTER[a.at_level(2)]
    return cmath.exp(2j * math.pi * a.numerator / (1 << a.level))


_QUARTER = (1 + 0j, 1j, -1 + 0j, -1j)


def e_phase_array(num: np.ndarray, level: int) -> np.ndarray:
    """e(num/2^level) for an array of numerators."""
    num = np.asarray(num, dtype=np.int64) % (1 << level)
    return np.exp(2j * np.pi * num.astype(np.float64) / float(1 << level))


def check_level(level: int) -> int:
    if level > MAX_LEVEL:
        raise LevelOverflow(f'level {level} exceeds {MAX_LEVEL}')
    return level
