import numpy as np
import pytest

from nilforge.dyadic import DyadicTorus
from nilforge.poly import FuncTable, PolyRep, Z4Poly, random_poly
from nilforge.polyio import (format_poly, format_pq, format_table, format_z4, parse_poly, parse_pq,
                             parse_table, parse_z4, read_any)
from nilforge.util.errors import ParseError
from nilforge.x5r import PseudoQuintic


def test_example_pair_reads(data_dir):
    q1 = read_any(str(data_dir / 'example_q1.poly'))
    q2 = read_any(str(data_dir / 'example_q2.poly'))
    assert q1.anf() == {1: 1, 3: 1, 12: 1}
    assert q2.anf() == {6: 1, 8: 1}


@pytest.mark.parametrize('name', ['example_q1.poly', 'example_q2.poly', 'example_s.pq'])
def test_golden_files_are_canonical(data_dir, name):
    text = (data_dir / name).read_text()
    obj = read_any(str(data_dir / name))
    out = format_pq(obj) if isinstance(obj, PseudoQuintic) else format_poly(obj)
    assert out == text


def test_poly_roundtrip():
    P = random_poly(5, 4, 3, 11)
    assert parse_poly(format_poly(P)) == P


def test_z4_roundtrip():
    R = Z4Poly(3, {0: 3, 1: 1, 6: 2, 7: 1})
    text = format_z4(R)
    assert text.startswith('POLY n=3 d=3 level=2 ring=Z4\nCONST 3/2^2\n')
    assert parse_z4(text) == R


def test_comments_and_blank_lines():
    text = '# x_1 x_2 / 2\n\nPOLY n=2 d=2 level=1\nCONST 1/2^1\n  # pair\nTERM 1,2 1\n'
    P = parse_poly(text)
    assert P.eval(0) == DyadicTorus.half()
    assert P.eval(3) == DyadicTorus.zero()


@pytest.mark.parametrize('text, line', [
    ('POLY n=2 d=1 level=1\nCONST 0/2^1\nTERM 3 1\n', 3),
    ('POLY n=2 d=1 level=1\nCONST 0/2^2\n', 2),
    ('POLY n=2 d=1\n', 1),
    ('POLY n=2 d=1 level=1\nCONST 0/2^1\nTERM 1 1\nTERM 1 1\n', 4),
    ('POLY n=2 d=1 level=1\nCONST 0/2^1\nTERM 2,1 1\n', 3),
    ('POLY n=2 d=3 level=1\nCONST 0/2^1\nTERM 1 1\n', 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as e:
        parse_poly(text, 'bad.poly')
    assert e.value.line == line
    assert e.value.filename == 'bad.poly'
    assert str(e.value).startswith(f'bad.poly:{line}:')


def test_z4_block_is_not_a_torus_polynomial():
    with pytest.raises(ParseError):
        parse_poly('POLY n=1 d=3 level=2 ring=Z4\nCONST 0/2^2\n')


def test_table_roundtrip(rng):
    T = FuncTable(3, 4, rng.integers(0, 16, size=8))
    text = format_table(T)
    assert text.splitlines()[1] == f'100,{T.values[1]},4'
    assert parse_table(text) == T


def test_table_rows_may_mix_levels():
    T = parse_table('0,0,0\n1,1,2\n')
    assert T.level == 2
    assert list(T.values) == [0, 1]


def test_table_errors():
    with pytest.raises(ParseError):
        parse_table('00,0,1\n10,1,1\n01,0,1\n')
    with pytest.raises(ParseError):
        parse_table('0,0,1\n1,1\n')
    with pytest.raises(ParseError):
        parse_table('0,0,1\n0,1,1\n')


def test_pq_roundtrip(data_dir):
    text = (data_dir / 'example_s.pq').read_text()
    pq = parse_pq(text)
    assert (pq.n, pq.r) == (4, 5)
    assert format_pq(pq) == text
    with pytest.raises(ParseError):
        parse_pq(text.replace('PSEUDOQUINTIC n=4', 'PSEUDOQUINTIC n=3'))


def test_read_any_table(tmp_path):
    path = tmp_path / 'f.csv'
    path.write_text(format_table(PolyRep.classical(2, {3: 1}, 2).to_table()))
    T = read_any(str(path))
    assert isinstance(T, FuncTable)
    assert np.array_equal(T.values, [0, 0, 0, 1])
