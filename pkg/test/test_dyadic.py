from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilforge.dyadic import (MAX_LEVEL, DyadicTorus, Z4, binom2, binom2_array, e_phase,
                             e_phase_array)
from nilforge.util.errors import LevelOverflow, ParseError

levels = st.integers(min_value=0, max_value=20)
elements = st.builds(lambda num, level: DyadicTorus(num, level), st.integers(-10**6, 10**6), levels)


def test_canonical_form():
    assert DyadicTorus(2, 2) == DyadicTorus(1, 1)
    assert DyadicTorus(4, 2).level == 0
    assert DyadicTorus(-1, 3).numerator == 7
    assert str(DyadicTorus(3, 3)) == '3/8'
    assert str(DyadicTorus.zero()) == '0'


def test_parse():
    assert DyadicTorus.parse('3/8') == DyadicTorus(3, 3)
    assert DyadicTorus.parse('3/2^3') == DyadicTorus(3, 3)
    assert DyadicTorus.parse('5') == DyadicTorus.zero()
    with pytest.raises(ParseError):
        DyadicTorus.parse('1/3')
    with pytest.raises(ParseError):
        DyadicTorus.parse('half')


def test_level_overflow():
    DyadicTorus(1, MAX_LEVEL)
    with pytest.raises(LevelOverflow):
        DyadicTorus(1, MAX_LEVEL + 1)
    with pytest.raises(LevelOverflow):
        DyadicTorus(1, MAX_LEVEL).halve()


def test_integers_vanish():
    h = DyadicTorus.half()
    assert h + h == 0
    assert h + 3 == h
    assert 3 * DyadicTorus(1, 2) == DyadicTorus(3, 2)


@given(elements, elements, elements)
def test_group_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert a + (-a) == DyadicTorus.zero()
    assert a - b == a + (-b)


@given(elements)
def test_halve_is_a_root(a):
    assert a.halve() * 2 == a


@given(elements)
def test_to_fraction(a):
    f = a.to_fraction()
    assert 0 <= f < 1
    assert f.denominator == 1 << a.level


def test_quarter_phases_exact():
    assert e_phase(DyadicTorus(1, 2)) == 1j
    assert e_phase(DyadicTorus.half()) == -1
    assert abs(e_phase(DyadicTorus(1, 3)) - np.exp(2j * np.pi / 8)) < 1e-12
    assert np.allclose(e_phase_array(np.array([0, 1, 2, 3]), 2), [1, 1j, -1, -1j])


def test_binom2_total_on_z4():
    # binom(n, 2) mod 2 depends only on n mod 4
    for n in range(64):
        assert binom2(n % 4) == (n * (n - 1) // 2) % 2
    assert list(binom2_array(np.arange(4))) == [0, 0, 1, 1]


def test_z4_arithmetic():
    assert Z4(3) + 2 == Z4(1)
    assert -Z4(1) == 3
    assert Z4(2) * 2 == 0
    assert binom2(Z4(2)) == 1


def test_fraction_roundtrip():
    assert DyadicTorus(5, 4).to_fraction() == Fraction(5, 16)
